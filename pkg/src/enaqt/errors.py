"""Exception types.  Input validation raises plain ``ValueError``."""


class NumericalError(RuntimeError):
    """A computation failed for numerical rather than input reasons."""


class DegenerateMatsubaraError(NumericalError):
    pass


class KernelPoleError(NumericalError):
    pass


class KernelFitError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


class NoSinkError(NumericalError):
    pass


class StepUnderflowError(NumericalError):
    def __init__(self, message: str, t_reached_ps: float):
        super().__init__(f"{message} at t = {t_reached_ps:.6g} ps")
        self.t_reached_ps = t_reached_ps
