"""Errors raised while building, rendering or reading audit reports."""


class ReportError(Exception):
    code = 'ReportError'

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def as_dict(self):
        return {'code': self.code, 'message': str(self), **self.context}


class EmptyCurve(ReportError):
    code = 'EmptyCurve'


class InvalidReport(ReportError):
    code = 'InvalidReport'
