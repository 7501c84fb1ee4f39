from typing import Optional, Any, Dict


class ExitCode:
    OK = 0
    GOLDEN_MISMATCH = 1
    VALIDATION = 2
    NUMERICAL = 3
    INTERNAL = 4


class BaseCevException(Exception):
    """基础异常类"""

    def __init__(
        self,
        exit_code: int,
        detail: str,
        error_code: Optional[str] = None,
        field: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None
    ):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
        self.error_code = error_code
        self.field = field
        self.context = context or {}


class ValidationException(BaseCevException):
    """参数验证异常"""

    def __init__(self, detail: str, field: Optional[str] = None, error_code: str = "VALIDATION_ERROR"):
        super().__init__(
            exit_code=ExitCode.VALIDATION,
            detail=detail,
            error_code=error_code,
            field=field
        )


class FixtureException(BaseCevException):
    """金标准文件异常"""

    def __init__(self, detail: str, error_code: str = "FIXTURE_ERROR"):
        super().__init__(
            exit_code=ExitCode.VALIDATION,
            detail=detail,
            error_code=error_code
        )


class NumericalException(BaseCevException):
    """数值可行性异常"""

    def __init__(
        self,
        detail: str,
        error_code: str = "NUMERICAL_ERROR",
        context: Optional[Dict[str, Any]] = None
    ):
        super().__init__(
            exit_code=ExitCode.NUMERICAL,
            detail=detail,
            error_code=error_code,
            context=context
        )


class DegenerateSpacingException(NumericalException):
    """网格间距退化"""

    def __init__(self, detail: str = "degenerate grid spacing", context: Optional[Dict[str, Any]] = None):
        super().__init__(detail=detail, error_code="DEGENERATE_SPACING", context=context)


class InadmissibleWeightsException(NumericalException):
    """转移权重越界"""

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(detail=detail, error_code="INADMISSIBLE_WEIGHTS", context=context)


class ConvergenceException(NumericalException):
    """迭代未收敛"""

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(detail=detail, error_code="NON_CONVERGENCE", context=context)


class GoldenMismatchException(BaseCevException):
    """与金标准不一致"""

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(
            exit_code=ExitCode.GOLDEN_MISMATCH,
            detail=detail,
            error_code="GOLDEN_MISMATCH",
            context=context
        )


def format_error_response(exc: BaseCevException) -> Dict[str, Any]:
    """格式化错误响应"""
    response = {
        "error": True,
        "error_code": exc.error_code,
        "message": exc.detail,
        "exit_code": exc.exit_code
    }
    if exc.field:
        response["field"] = exc.field
    if exc.context:
        response["context"] = exc.context
    return response
