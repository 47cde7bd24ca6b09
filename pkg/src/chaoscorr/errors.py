class ConfigError(ValueError):
    """Invalid sweep or CLI configuration."""


class NumericalError(RuntimeError):
    """An eigensolver or integrator could not produce a trustworthy result."""


class PoleError(NumericalError):
    """Trajectory reached the |P| = 1 coordinate singularity of the atomic sector."""


class EmptyShellError(ValueError):
    pass
