class SimulationError(Exception):
    code = 'SimulationError'

    def as_dict(self):
        return {'code': self.code, 'message': str(self)}


class InvalidParams(SimulationError):
    code = 'InvalidParams'


class InfeasibleTarget(SimulationError):
    code = 'InfeasibleTarget'
