"""Exception hierarchy.

Every error carries a stable ``code`` used as the CLI exit status and in
JSON error documents.
"""


class ThreeScaleError(Exception):
    code = 1
    slug = "error"

    def to_json(self):
        return {"error": self.slug, "code": self.code, "message": str(self)}


class ConfigError(ThreeScaleError):
    code = 3
    slug = "config"


class InvalidExpressionError(ThreeScaleError):
    code = 10
    slug = "invalid-expression"


class EvaluationError(ThreeScaleError):
    code = 11
    slug = "evaluation"


class DimensionError(ThreeScaleError):
    code = 12
    slug = "dimension"


class SingularMatrixError(ThreeScaleError):
    code = 13
    slug = "singular-matrix"


class ParseError(ThreeScaleError):
    code = 20
    slug = "syntax"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)

    def to_json(self):
        doc = super().to_json()
        doc.update(line=self.line, column=self.column)
        return doc


class NetworkError(ThreeScaleError):
    code = 21
    slug = "network"


class ConservationError(ThreeScaleError):
    code = 22
    slug = "conservation"


class MalformedSurfaceError(ThreeScaleError):
    code = 30
    slug = "malformed-surface"


class StrictRemainderError(ThreeScaleError):
    code = 31
    slug = "nonzero-remainder"


class DecompositionError(ThreeScaleError):
    code = 40
    slug = "decomposition-failure"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateDecompositionError(ThreeScaleError):
    code = 41
    slug = "degenerate-decomposition"


class PreconditionError(ThreeScaleError):
    code = 50
    slug = "precondition"


class OffManifoldError(ThreeScaleError):
    code = 51
    slug = "off-manifold"


class NotSignDefiniteError(ThreeScaleError):
    code = 60
    slug = "not-sign-definite"


class NewtonDivergenceError(ThreeScaleError):
    code = 70
    slug = "newton-divergence"


class AmbiguousRootError(ThreeScaleError):
    code = 71
    slug = "ambiguous-root"

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class StepSizeUnderflowError(ThreeScaleError):
    code = 80
    slug = "step-size-underflow"


class EmptyOverlapError(ThreeScaleError):
    code = 81
    slug = "empty-overlap"
