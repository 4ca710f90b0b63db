"""Exception hierarchy shared by all modules."""


class SdeError(Exception):
    """Base class for every error raised by tamesde."""


class ArgumentError(SdeError, ValueError):
    pass


class ConfigurationError(SdeError, ValueError):
    pass


class CapabilityError(SdeError):
    """A scheme needs something the model does not provide."""


class PreconditionError(SdeError, ValueError):
    pass


class ParameterError(SdeError, ValueError):
    pass


class EvaluationError(SdeError, ArithmeticError):
    """A coefficient or derivative produced a non-finite value."""

    def __init__(self, component, message=None):
        self.component = component
        super().__init__(message or f"non-finite value in {component}")


class StepError(SdeError, ArithmeticError):
    """An implicit step failed to produce an acceptable root."""

    def __init__(self, message, residual=None, node=None, samples=None):
        self.residual = residual
        self.node = node
        self.samples = samples
        super().__init__(message)

    def at_node(self, node):
        msg = f"{self.args[0]} (node {node})"
        return StepError(msg, residual=self.residual, node=node, samples=self.samples)
