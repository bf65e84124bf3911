import json
from typing import Any, Dict

from voluptuous import Invalid, MultipleInvalid, Schema

from vesselkin.exceptions import ConfigException

__all__ = ['validate_data', 'load_json']


def _classify(error: Invalid) -> str:
    msg = error.msg or ''
    if msg.startswith('extra keys not allowed'):
        return 'unknown_key'
    if msg.startswith('required key not provided'):
        return 'missing_key'
    if msg.startswith('positivity violated'):
        return 'positivity'
    return 'invalid_value'


def validate_data(schema: Schema, data: Dict[Any, Any]) -> Dict[Any, Any]:
    """
    Compare configuration data to a provided voluptuous schema.

    :param schema: A voluptuous Schema object
    :param data:   The unserialized configuration dictionary

    :return:                 The validated data with defaults filled in
    :raises ConfigException: If the data is invalid; the first error decides the code
    """
    try:
        return schema(data)
    except Invalid as e:
        if isinstance(e, MultipleInvalid):
            e = e.errors[0]
        key = '.'.join([str(p) for p in e.path])
        raise ConfigException(
            f'Invalid data: {e.msg} (key "{key}")', code=_classify(e), key=key
        )


def load_json(text: str) -> Dict[Any, Any]:
    """
    Turn configuration text into a dictionary.

    :return:                 The unserialized dict
    :raises ConfigException: If the text cannot be decoded from JSON
    """
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigException(
            f'Unable to decode config: {e.msg} (line {e.lineno}, column {e.colno})',
            code='malformed',
            line=e.lineno,
        )
    if not isinstance(data, dict):
        raise ConfigException('Config must be a JSON object.', code='malformed')
    return data
