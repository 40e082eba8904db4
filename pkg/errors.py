class DendramError(Exception):
    exit_code = 1
    category = "error"


class DomainError(DendramError, ValueError):
    exit_code = 6
    category = "domain"


class LevelIndexError(DendramError, IndexError):
    exit_code = 6
    category = "level-index"


class ConfigError(DendramError, ValueError):
    exit_code = 2
    category = "config"


class ParseError(DendramError, ValueError):
    exit_code = 3
    category = "parse"

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path, self.line = path, line


class DataIOError(DendramError, OSError):
    exit_code = 4
    category = "io"


class NumericalError(DendramError, ArithmeticError):
    exit_code = 5
    category = "numerical"


class ScaleError(DendramError, ValueError):
    exit_code = 6
    category = "scale"


class EvaluationError(DendramError, ValueError):
    exit_code = 7
    category = "evaluation"
