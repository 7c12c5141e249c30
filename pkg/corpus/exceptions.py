"""Errors raised while building or reading a citation corpus."""


class CorpusError(Exception):
    """Base class for corpus validation failures"""

    code = 'CorpusError'

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def as_dict(self):
        return {'code': self.code, 'message': str(self), **self.context}


class DuplicateId(CorpusError):
    code = 'DuplicateId'


class DuplicateEdge(CorpusError):
    code = 'DuplicateEdge'


class DanglingEdge(CorpusError):
    code = 'DanglingEdge'


class SelfLoop(CorpusError):
    code = 'SelfLoop'


class EmptyAuthors(CorpusError):
    code = 'EmptyAuthors'


class UnknownId(CorpusError):
    code = 'UnknownId'


class MissingField(CorpusError):
    code = 'MissingField'


class InvalidRecord(CorpusError):
    code = 'InvalidRecord'


class IngestError(Exception):
    """Whole-file ingest failure (unreadable stream, bad header, strict mode)"""

    code = 'IngestError'

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class Io(IngestError):
    code = 'Io'


class MalformedHeader(IngestError):
    code = 'MalformedHeader'


class StrictRejection(IngestError):
    code = 'StrictRejection'
