import json
from enum import Enum

import numpy as np


class ReportEncoder(json.JSONEncoder):
    """
    JSON encoder for run summaries and diagnostics records. numpy scalars and arrays
    become plain numbers and lists, enums their values, and objects exposing
    ``serialize()`` are turned into dictionaries.
    """

    def default(self, obj):
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, set):
            return sorted(obj)
        if hasattr(obj, 'serialize'):
            return self._objects_to_dict(obj.serialize())
        return super().default(obj)

    def _objects_to_dict(self, dict_: dict) -> dict:
        """
        Iterate through all values inside a dictionary and make them JSON serializable.
        Non-finite floats are written as strings so that every record stays valid JSON.

        :param dict_: The dictionary to iterate over
        :return:      A JSON serializable copy of the dictionary
        """

        def iter_handler(value):
            if isinstance(value, dict):
                return self._objects_to_dict(value)
            if hasattr(value, 'serialize'):
                return self._objects_to_dict(value.serialize())
            if isinstance(value, (list, tuple)):
                return [iter_handler(v) for v in value]
            if isinstance(value, np.ndarray):
                return [iter_handler(v) for v in value.tolist()]
            if isinstance(value, (np.generic, Enum, set)):
                return iter_handler(self.default(value))
            if isinstance(value, float) and not np.isfinite(value):
                return repr(value)
            return value

        return {k: iter_handler(v) for k, v in dict_.items()}

    def encode(self, obj):
        if isinstance(obj, dict):
            obj = self._objects_to_dict(obj)
        return super().encode(obj)
