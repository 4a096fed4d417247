import json

from peewee import TextField

class JSONField(TextField):
    """
    A TextField holding a JSON document.
    Methods:
        db_value(value):
            Serializes the value with sorted keys so identical documents are stored identically.
        python_value(value):
            Parses the stored text back into Python objects; NULL stays None.
    """

    def db_value(self, value):
        if value is None:
            return None
        return super().db_value(json.dumps(value, sort_keys=True))

    def python_value(self, value):
        if value is None:
            return None
        return json.loads(value)
