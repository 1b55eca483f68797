"""Line-oriented key/value text used for model and report files.

Each line is ``key value [value ...]``; floats are written with 17
significant digits so they parse back to the identical double.
"""


def fmt(v):
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return format(float(v), ".17g")


def line(key, *values):
    return " ".join([key] + [fmt(v) if not isinstance(v, str) else v for v in values])


def parse(text):
    """Yield ``(key, [tokens])`` for every non-blank, non-comment line."""
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        key, *rest = raw.split()
        yield key, rest


def floats(tokens):
    return [float(t) for t in tokens]


def expect_header(text, kind):
    items = list(parse(text))
    if not items or items[0] != ("model", [kind]):
        raise ValueError(f"not a serialized {kind} model")
    return items[1:]
