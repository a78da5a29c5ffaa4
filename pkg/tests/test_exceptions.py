import inspect

import pytest

from sadiag import exceptions
from sadiag.exceptions import (
    ConfigurationError,
    DiagnosisError,
    EmptyInputError,
    IndefiniteKernelWarning,
    LengthError,
    ParseError,
)


def test_every_error_type_derives_from_the_package_base():
    for name, obj in inspect.getmembers(exceptions, inspect.isclass):
        if issubclass(obj, Warning):
            continue
        if issubclass(obj, Exception):
            assert issubclass(obj, DiagnosisError), name


def test_one_handler_catches_all_package_errors():
    with pytest.raises(DiagnosisError):
        raise ParseError("x")
    with pytest.raises(DiagnosisError):
        raise ConfigurationError("x")
    assert issubclass(EmptyInputError, ParseError)


def test_value_like_errors_also_subclass_valueerror():
    assert issubclass(ConfigurationError, ValueError)
    assert issubclass(LengthError, ValueError)


def test_kernel_warning_is_a_user_warning():
    assert issubclass(IndefiniteKernelWarning, UserWarning)
    assert not issubclass(IndefiniteKernelWarning, DiagnosisError)
