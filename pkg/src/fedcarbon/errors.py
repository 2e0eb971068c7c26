"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Arguments are individually valid but mutually inconsistent."""


class ConfigurationError(ValueError):
    """A scenario lacks a quantity the requested evaluation needs."""


class UnknownNameError(KeyError):
    """Lookup of a preset or profile name failed."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class DivergedError(RuntimeError):
    """Training produced non-finite values."""

    def __init__(self, round_index: int, where: str = "gradient"):
        super().__init__(f"non-finite {where} at round {round_index}")
        self.round_index = round_index
