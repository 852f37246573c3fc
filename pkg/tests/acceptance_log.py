"""Details recorded by the acceptance tests, printed by the conftest summary hook."""

DETAILS: dict[str, str] = {}
OUTCOMES: dict[str, str] = {}
