"""Exception and warning types shared across the package."""


class InputError(ValueError):
    """Invalid argument or malformed input file."""


class ClusterAmbiguityError(InputError):
    """An eigenvalue sits within clustering tolerance of two cluster means."""


class IllConditionedError(ArithmeticError):
    """A linear system is too ill-conditioned to solve reliably."""


class ConvergenceError(ArithmeticError):
    """An iterative routine exhausted its iteration budget."""


class PrecisionWarning(UserWarning):
    """A numerical result may carry more error than its nominal target."""
