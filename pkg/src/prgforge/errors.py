"""Exception hierarchy.

UserInputError maps to CLI exit code 1 (bad flags, malformed config, refused
preconditions); everything else escaping to the CLI maps to exit code 2.
"""


class ForgeError(Exception):
    """Base class for all package errors."""


class UserInputError(ForgeError):
    """Invalid user-supplied value, file, or configuration."""


class GridError(UserInputError):
    """A declared parameter is not representable on the dyadic grid R_tau."""


class HeadroomExceeded(ForgeError, ArithmeticError):
    """An intermediate exact value outgrew the configured mantissa budget."""


class CertificateRefused(ForgeError):
    """A diversity certificate's preconditions failed; carries diagnostics."""
