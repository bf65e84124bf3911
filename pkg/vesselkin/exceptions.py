from typing import Optional


class SimulationException(Exception):
    """General exception thrown by a run, carries the process exit code for the CLI."""

    def __init__(self, message, exit_code=1) -> None:
        super().__init__(message)
        self.message: str = message
        self.exit_code: int = exit_code

    def __repr__(self) -> str:
        return f'<{type(self).__name__} (Code: {self.exit_code}) [Message: {self.message}]>'

    def __str__(self) -> str:
        return self.message


class ConfigException(SimulationException):
    """
    The run configuration cannot be used. ``code`` tells the failure classes apart:
    ``malformed``, ``unknown_key``, ``missing_key``, ``positivity``, ``invalid_value``.
    """

    def __init__(
        self,
        message: str,
        code: str = 'invalid_value',
        key: Optional[str] = None,
        line: Optional[int] = None,
    ) -> None:
        super().__init__(message=message, exit_code=2)
        self.code = code
        self.key = key
        self.line = line


class AdmissibilityException(SimulationException):
    def __init__(self, product: float) -> None:
        super().__init__(
            message=f'admissibility failed: K1·K2 = {product:.6g} ≥ 1',
            exit_code=3,
        )
        self.product = product


class NumericalException(SimulationException):
    def __init__(self, message: str = None) -> None:
        super().__init__(
            message=(message or 'Numerical abort.'), exit_code=4
        )


class GateException(SimulationException):
    def __init__(self, gates: list) -> None:
        super().__init__(
            message=f'Gate failure: {", ".join(gates)}.', exit_code=5
        )
        self.gates = gates


class SnapshotException(SimulationException):
    def __init__(self, message: str, reason: str = 'corrupted') -> None:
        super().__init__(message=message, exit_code=2)
        self.reason = reason
