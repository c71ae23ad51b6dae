from typing import Optional


class TokenFlowError(Exception):
    """Базовая ошибка приложения с кодом завершения CLI"""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def add_context(self, context: str) -> "TokenFlowError":
        """Добавляет контекст (id проверки, шаг) в начало сообщения"""
        self.detail = f"{context}: {self.detail}"
        self.args = (self.detail,)
        return self

    def __reduce__(self):
        # Подклассы с обязательными аргументами восстанавливаются из __dict__
        return _restore, (type(self), self.__dict__.copy())


def _restore(cls, state):
    exc = cls.__new__(cls)
    Exception.__init__(exc, state["detail"])
    exc.__dict__.update(state)
    return exc


class ConfigError(TokenFlowError):
    """Некорректная конфигурация, неизвестный сценарий или проверка"""

    exit_code = 2


class StorageError(TokenFlowError):
    """Ошибка чтения или записи файлов"""

    exit_code = 1


class NumericalError(TokenFlowError):
    """Численный сбой; сообщение содержит шаг и индекс частицы, если они известны"""

    exit_code = 3

    def __init__(self, detail: str, step: Optional[int] = None, particle: Optional[int] = None):
        context = []
        if step is not None:
            context.append(f"шаг {step}")
        if particle is not None:
            context.append(f"частица {particle}")
        if context:
            detail = f"{detail} ({', '.join(context)})"
        super().__init__(detail)
        self.step = step
        self.particle = particle


class DegenerateStepError(NumericalError):
    """Вектор перед нормализацией почти нулевой"""


class ClockOverflowError(NumericalError):
    """Множитель часов парной фазы превысил допустимый предел"""


class AssumptionViolation(NumericalError):
    """Нарушено предположение об обратимости K^T Q"""


class QuadratureError(NumericalError):
    """Квадратура не сошлась"""


class ClusterError(NumericalError):
    """Вырожденный центроид кластера"""


class SchurConvergenceError(NumericalError):
    """Разложение Шура не сошлось"""

    def __init__(self, detail: str, residual: float):
        super().__init__(f"{detail}; невязка {residual:.3e}")
        self.residual = residual


class HeatCollapseError(NumericalError):
    """Обратная эволюция достигла схлопывания компоненты смеси"""

    def __init__(self, detail: str, component: int):
        super().__init__(detail)
        self.component = component
