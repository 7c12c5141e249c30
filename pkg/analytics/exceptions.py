"""Errors raised by the metrics and anomaly pipeline."""


class AnalysisError(Exception):
    """Base class for analysis failures; `code` is stable for reports and exit handling"""

    code = 'AnalysisError'

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def as_dict(self):
        return {'code': self.code, 'message': str(self), **self.context}


class NoPublications(AnalysisError):
    code = 'NoPublications'


class EmptyTargetSet(AnalysisError):
    code = 'EmptyTargetSet'


class NoCoveredMembers(AnalysisError):
    code = 'NoCoveredMembers'


class TooFewPoints(AnalysisError):
    code = 'TooFewPoints'


class DegenerateFit(AnalysisError):
    code = 'DegenerateFit'


class RankMismatch(AnalysisError):
    code = 'RankMismatch'


class ConfigError(AnalysisError):
    code = 'ConfigError'
