"""
各包共用的异常层级。

DataError -> CLI 退出码 3，NumericError -> 退出码 4（用法错误为 2）。
"""

from __future__ import annotations


class ActionWordError(Exception):
    exit_code = 1


class DataError(ActionWordError, ValueError):
    exit_code = 3


class NumericError(ActionWordError, ArithmeticError):
    exit_code = 4


class UsageError(ActionWordError):
    """运行配置无效（参数值或配置文件有误）。"""

    exit_code = 2


# ---- features ----
class InsufficientData(DataError):
    pass


class DimTooLarge(DataError):
    pass


class DimMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptyStats(DataError):
    pass


class InsufficientComponents(DataError):
    pass


# ---- codebook / encoding ----
class TooFewSamples(DataError):
    pass


class KTooLarge(DataError):
    pass


class InconsistentDim(DataError):
    pass


class UnknownWordId(DataError):
    pass


# ---- nn ----
class WindowTooLarge(DataError):
    pass


class EmptyMask(DataError):
    pass


class InvalidRate(DataError):
    pass


class GraphCycle(DataError):
    pass


# ---- models ----
class BadConfig(DataError):
    pass


class EmptyDataset(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class NotStochastic(DataError):
    pass


class StationaryMismatch(DataError):
    pass


# ---- 文件 ----
class FormatError(DataError):
    pass


# ---- 数值 ----
class NonFiniteInput(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass
