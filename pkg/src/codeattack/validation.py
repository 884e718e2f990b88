"""Input validation helpers used by the estimator API and the CLI.

Each helper either returns the normalized value or raises ValueError with a
message naming the offending parameter, mirroring scikit-learn's style of
validating at fit/call time rather than in ``__init__``.
"""

from .errors import UnsupportedLanguage

LANGUAGES = ("java", "csharp", "python", "php")
TASKS = ("translate", "repair", "summarize")
MODES = ("full", "rand", "vul", "op", "optok")
EDIT_KINDS = ("token", "operator")


def check_language(language):
    lang = str(language).strip().lower()
    aliases = {"c#": "csharp", "cs": "csharp", "py": "python"}
    lang = aliases.get(lang, lang)
    if lang not in LANGUAGES:
        raise UnsupportedLanguage(language)
    return lang


def check_task(task):
    value = str(task).strip().lower()
    if value not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    return value


def check_mode(mode):
    value = str(mode).strip().lower()
    if value not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return value


def check_fraction(value, name, *, low=0.0, high=1.0, inclusive_low=True):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    ok_low = x >= low if inclusive_low else x > low
    if not (ok_low and x <= high):
        bracket = "[" if inclusive_low else "("
        raise ValueError(f"{name} must be in {bracket}{low}, {high}], got {x}")
    return x


def check_nonnegative(value, name):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if x < 0:
        raise ValueError(f"{name} must be >= 0, got {x}")
    return x


def check_positive_int(value, name):
    try:
        x = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be an integer, got {value!r}") from None
    if x < 1:
        raise ValueError(f"{name} must be >= 1, got {x}")
    return x


def check_edit_kinds(allowed_edits):
    """Normalize an allowed-edits collection to a sorted tuple, or None."""
    if allowed_edits is None:
        return None
    kinds = []
    for kind in allowed_edits:
        value = str(kind).strip().lower()
        aliases = {"tokenlevel": "token", "operatorlevel": "operator"}
        value = aliases.get(value, value)
        if value not in EDIT_KINDS:
            raise ValueError(
                f"allowed_edits entries must be in {EDIT_KINDS}, got {kind!r}"
            )
        kinds.append(value)
    if not kinds:
        raise ValueError("allowed_edits must not be empty when given")
    return tuple(sorted(set(kinds)))
