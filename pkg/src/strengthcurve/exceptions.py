"""Exception types raised across the package."""

from sklearn.exceptions import NotFittedError

__all__ = ["DataValidationError", "TrainingDivergedError", "NotFittedError"]


class DataValidationError(ValueError):
    """Input data is malformed or breaks a record invariant.

    ``row`` is the 1-based data row (header excluded) when the error comes
    from a file, ``column`` the offending column name when known.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class TrainingDivergedError(ArithmeticError):
    """Gradient descent produced a non-finite training loss."""

    def __init__(self, epoch, learning_rate):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"training loss became non-finite at epoch {epoch} "
            f"(learning_rate={learning_rate}); try a smaller learning rate"
        )
