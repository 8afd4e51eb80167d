"""Hiérarchie d'exceptions du moteur de détection."""


class DetectionError(Exception):
    """Erreur racine : toute erreur opérationnelle du moteur."""


class ConfigError(DetectionError):
    pass


class ParseError(DetectionError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"ligne {line_no} : {reason}")
        self.line_no = line_no
        self.reason = reason


class InsufficientBaselineError(DetectionError):
    pass


class UnknownEventTypeError(DetectionError):
    pass


class RulesError(DetectionError):
    pass


class ReasonerError(DetectionError):
    """Erreur du raisonneur, considérée comme réessayable."""


class SchemaViolationError(ReasonerError):
    """Réponse du raisonneur invalide (schéma ou processus inconnu)."""


class ScenarioError(DetectionError):
    pass


class EvaluationMismatchError(DetectionError):
    pass


class WindowError(DetectionError):
    def __init__(self, window_index: int, cause: Exception):
        super().__init__(f"fenêtre {window_index} : {cause}")
        self.window_index = window_index
        self.cause = cause
