class WebOSError(Exception):
    """Base class for every error raised by the interpreter."""


class ParseError(WebOSError):
    def __init__(self, message, line=0, col=0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ResolveError(WebOSError):
    pass


class PreconditionError(WebOSError):
    pass


class EvalError(WebOSError):
    pass


class LocError(WebOSError):
    pass


class ConfigError(WebOSError):
    pass


class ScriptError(WebOSError):
    pass


class LoadError(WebOSError):
    def __init__(self, message, line=0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line
