"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class FermiMirrorError(Exception):
    exit_code = 3
    code = "error"


class ConfigError(FermiMirrorError, ValueError):
    """Invalid parameters or configuration file."""

    exit_code = 2
    code = "config"


class NumericalError(FermiMirrorError, ArithmeticError):
    """A computation failed or produced a result outside its contract."""

    exit_code = 3
    code = "numeric"


class UnstableStateError(NumericalError):
    code = "unstable_state"


class NeverBistableError(NumericalError):
    code = "never_bistable"


class HeadroomError(NumericalError):
    """The truncated momentum window cannot host the particle-hole window."""

    code = "headroom"


class RegimeError(FermiMirrorError):
    exit_code = 4
    code = "regime"
