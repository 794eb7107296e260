"""
Hierarquia de exceções do Detector SYN

Toda falha de entrada/configuração vira InputError (código de saída 2);
qualquer outra exceção é tratada como erro interno (código 1).
"""

from typing import Optional


EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID_INPUT = 2


class SynDetectError(Exception):
    """Erro base do pipeline."""


class InputError(SynDetectError, ValueError):
    """Entrada ou configuração inválida."""


class DataFormatError(InputError):
    """Problema no CSV de fluxos (linha irregular, rótulo desconhecido, ...)."""

    def __init__(self, message: str,
                 row_index: Optional[int] = None,
                 column: Optional[str] = None):
        super().__init__(message)
        self.row_index = row_index
        self.column = column


class ConfigError(InputError):
    """Parâmetro de configuração fora do domínio."""


class ModelFormatError(InputError):
    """Arquivo de modelo inválido, truncado ou corrompido."""


class TrainingError(InputError):
    """Dados de treino inadequados (ex.: apenas uma classe)."""

    def __init__(self, message: str, fold: Optional[int] = None):
        super().__init__(message)
        self.fold = fold


class TuningError(SynDetectError):
    """Falha ao avaliar uma combinação do grid."""

    def __init__(self, combination: dict, cause: Exception):
        super().__init__(f"Falha na combinação {combination}: {cause}")
        self.combination = combination
        self.cause = cause

    def __reduce__(self):
        return (TuningError, (self.combination, self.cause))


def exit_code_for(error: BaseException) -> int:
    """Converte uma exceção no código de saída do CLI."""
    if isinstance(error, TuningError):
        return exit_code_for(error.cause)
    if isinstance(error, (InputError, FileNotFoundError, IsADirectoryError)):
        return EXIT_INVALID_INPUT
    return EXIT_INTERNAL
