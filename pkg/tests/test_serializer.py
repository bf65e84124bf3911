import json

import numpy as np
import pytest

from vesselkin import ReportEncoder
from vesselkin.diagnostics import Check
from vesselkin.io import RunMode


def test_failed_serialization_default():
    """Assert that serialization still fails for invalid inputs."""
    with pytest.raises(TypeError):
        ReportEncoder().default('a string')


def test_serialization_of_numpy_values():
    """numpy scalars become plain numbers and arrays become lists."""
    assert ReportEncoder().default(np.float64(1.5)) == 1.5
    assert ReportEncoder().default(np.int64(3)) == 3
    assert ReportEncoder().default(np.arange(3)) == [0, 1, 2]


def test_serialization_of_sets():
    """Sets are serialized as sorted lists."""
    assert ReportEncoder().default({3, 1, 2}) == [1, 2, 3]


def test_serialization_of_enums():
    assert ReportEncoder().default(RunMode.LINEAR_FP) == 'linear-fp'


def test_serialization_of_objects():
    """Objects exposing serialize() are written as dictionaries."""
    data = json.loads(json.dumps({'check': Check(bound=1.0, observed=0.5)}, cls=ReportEncoder))
    assert data['check'] == {
        'bound': 1.0,
        'observed': 0.5,
        'margin': 0.5,
        'pass': True,
        'applicable': True,
    }


def test_serialization_of_non_finite_floats():
    """Non-finite values are written as strings so every record stays valid JSON."""
    text = json.dumps({'a': float('inf'), 'b': [np.nan, 1.0]}, cls=ReportEncoder)
    assert json.loads(text) == {'a': 'inf', 'b': ['nan', 1.0]}
