"""Metric-pair files: a small YAML format describing two metrics on a chart.

Required keys: ``dim`` (int), ``coords`` (list of names), ``g`` and ``gbar``
(each an n x n matrix of expression strings; giving only the lower triangle,
row i with i+1 entries, is enough), and ``domain`` (mapping coordinate ->
[lo, hi]).  Optional: ``name``, ``notes``.

When a full matrix is given, each off-diagonal pair must agree: either the
two strings are identical, or the parsed expressions evaluate to exactly the
same values on a deterministic sample of domain points.

All load failures raise :class:`PairFileError` carrying a 1-based line and
column whenever the offending spot in the file can be located.
"""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np
import yaml

from .errors import DegenerateMetricError, ExpressionError, PairFileError
from .expr import FUNCTIONS, evaluate, parse
from .geometry import MetricField
from .projective import ProjectivePair

_KEYS = {"dim", "coords", "g", "gbar", "domain", "name", "notes"}
_REQUIRED = ("dim", "coords", "g", "gbar", "domain")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")


def _mark(node):
    if node is None or node.start_mark is None:
        return (None, None)
    return (node.start_mark.line + 1, node.start_mark.column + 1)


def _node_at(root, path, at_key: bool = False):
    """Descend a composed YAML node tree by mapping keys / sequence indices.

    With at_key, the final string step resolves to the key node itself.
    """
    node = root
    for pos, step in enumerate(path):
        if node is None:
            return None
        if isinstance(step, str) and isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == step:
                    node = key_node if at_key and pos == len(path) - 1 else value_node
                    break
            else:
                return None
        elif isinstance(step, int) and isinstance(node, yaml.SequenceNode):
            if step >= len(node.value):
                return None
            node = node.value[step]
        else:
            return None
    return node


class _Source:
    """Parsed YAML data plus the node tree, for positioned diagnostics."""

    def __init__(self, text: str, label: str):
        self.label = label
        try:
            self.data = yaml.safe_load(text)
            self.root = yaml.compose(text)
        except yaml.MarkedYAMLError as err:
            line = col = None
            if err.problem_mark is not None:
                line = err.problem_mark.line + 1
                col = err.problem_mark.column + 1
            problem = err.problem or "invalid YAML"
            raise PairFileError(f"{label}: {problem}", line, col) from err
        except yaml.YAMLError as err:
            raise PairFileError(f"{label}: {err}") from err

    def fail(self, message: str, path=(), at_key: bool = False):
        line, col = _mark(_node_at(self.root, tuple(path), at_key=at_key))
        raise PairFileError(f"{self.label}: {message}", line, col)


def _expand_matrix(src: _Source, key: str, dim: int, coords):
    rows = src.data.get(key)
    if not isinstance(rows, list) or len(rows) != dim:
        src.fail(f"{key} must be a list of {dim} rows", (key,))
    full = [[None] * dim for _ in range(dim)]
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            src.fail(f"{key} row {i} must be a list", (key, i))
        if len(row) not in (i + 1, dim):
            src.fail(
                f"{key} row {i} must have {i + 1} (lower triangle) or "
                f"{dim} entries, got {len(row)}",
                (key, i),
            )
        for j, entry in enumerate(row):
            if not isinstance(entry, str):
                src.fail(
                    f"{key}[{i}][{j}] must be an expression string",
                    (key, i, j),
                )
            try:
                parsed = parse(entry, coords)
            except ExpressionError as err:
                _fail_expression(src, err, (key, i, j), f"{key}[{i}][{j}]")
            full[i][j] = (entry, parsed, (key, i, j))
    # mirror the lower triangle; reconcile duplicates of full matrices
    for i in range(dim):
        for j in range(i + 1, dim):
            lower = full[j][i] if len(rows[j]) > i else None
            upper = full[i][j]
            if upper is None and lower is None:
                src.fail(f"{key} is missing entry [{i}][{j}]", (key,))
            if upper is None:
                full[i][j] = lower
            elif lower is not None:
                _check_duplicates(src, upper, lower, key, i, j)
    for i in range(dim):
        for j in range(i):
            if full[i][j] is None:
                full[i][j] = full[j][i]
    return [[cell[0] for cell in row] for row in full]


def _fail_expression(src: _Source, err: ExpressionError, path, where: str):
    """Report an expression error at its exact column within the file.

    The parser gives a character offset inside the entry; for single-line
    scalars that offset is added to the scalar's own column (plus one for
    the opening quote, if any).
    """
    node = _node_at(src.root, tuple(path))
    line, col = _mark(node)
    offset = getattr(err, "position", None)
    if (
        col is not None
        and offset is not None
        and isinstance(node, yaml.ScalarNode)
        and "\n" not in node.value
    ):
        if node.style in ("'", '"'):
            col += 1
        col += offset
    raise PairFileError(f"{src.label}: {where}: {err}", line, col)


def _check_duplicates(src: _Source, upper, lower, key, i, j):
    """Off-diagonal duplicates must match as strings or numerically."""
    text_u, expr_u, path_u = upper
    text_l, expr_l, path_l = lower
    if text_u == text_l or expr_u == expr_l:
        return
    for point in _probe_points(src):
        assignment = dict(zip(src.data["coords"], point))
        try:
            vu = evaluate(expr_u, assignment)
            vl = evaluate(expr_l, assignment)
        except ExpressionError:
            continue  # off-domain probe; disagreement must show elsewhere
        if vu != vl:
            src.fail(
                f"{key}[{i}][{j}] and {key}[{j}][{i}] disagree "
                f"({vu!r} vs {vl!r} at {tuple(point)})",
                path_l,
            )


def _probe_points(src: _Source):
    domain = src.data.get("domain")
    coords = src.data.get("coords", [])
    if not isinstance(domain, dict):
        return []
    boxes = []
    for c in coords:
        iv = domain.get(c)
        if not (isinstance(iv, list) and len(iv) == 2):
            return []
        boxes.append((float(iv[0]), float(iv[1])))
    rng = np.random.default_rng(0)
    pts = []
    for _ in range(7):
        pts.append([rng.uniform(lo, hi) for lo, hi in boxes])
    return pts


def parse_pair(text: str, label: str = "<pair>") -> ProjectivePair:
    """Parse metric-pair text; raises PairFileError with positions on failure."""
    src = _Source(text, label)
    if not isinstance(src.data, dict):
        src.fail("top level must be a mapping")
    unknown = set(src.data) - _KEYS
    if unknown:
        bad = sorted(unknown)[0]
        src.fail(f"unknown key {bad!r}", (bad,), at_key=True)
    for key in _REQUIRED:
        if key not in src.data:
            src.fail(f"missing required key {key!r}")

    dim = src.data["dim"]
    if not isinstance(dim, int) or dim < 1:
        src.fail("dim must be a positive integer", ("dim",))

    coords = src.data["coords"]
    if not isinstance(coords, list) or len(coords) != dim:
        src.fail(f"coords must list {dim} names", ("coords",))
    for k, c in enumerate(coords):
        if not isinstance(c, str) or not _NAME_RE.match(c):
            src.fail(f"coordinate {c!r} is not a valid identifier", ("coords", k))
        if c in FUNCTIONS:
            src.fail(f"coordinate {c!r} collides with a function name", ("coords", k))
    if len(set(coords)) != dim:
        src.fail("coordinate names must be distinct", ("coords",))
    coords = tuple(coords)

    domain = src.data["domain"]
    if not isinstance(domain, dict):
        src.fail("domain must map coordinates to [lo, hi]", ("domain",))
    extra = set(domain) - set(coords)
    if extra:
        src.fail(f"domain names unknown coordinate {sorted(extra)[0]!r}", ("domain",))
    box = {}
    for c in coords:
        iv = domain.get(c)
        if iv is None:
            src.fail(f"domain missing coordinate {c!r}", ("domain",))
        ok = (
            isinstance(iv, list)
            and len(iv) == 2
            and all(isinstance(v, (int, float)) and np.isfinite(v) for v in iv)
            and iv[0] < iv[1]
        )
        if not ok:
            src.fail(
                f"domain[{c}] must be [lo, hi] with lo < hi", ("domain", c)
            )
        box[c] = (float(iv[0]), float(iv[1]))

    name = src.data.get("name")
    if name is not None and not isinstance(name, str):
        src.fail("name must be a string", ("name",))
    notes = src.data.get("notes")
    if notes is not None and not isinstance(notes, str):
        src.fail("notes must be a string", ("notes",))

    g_texts = _expand_matrix(src, "g", dim, coords)
    gbar_texts = _expand_matrix(src, "gbar", dim, coords)
    try:
        g = MetricField(coords, g_texts, name=f"{name or label}:g")
        gbar = MetricField(coords, gbar_texts, name=f"{name or label}:gbar")
        pair = ProjectivePair(g, gbar, domain=box, name=name, notes=notes)
    except ValueError as err:
        raise PairFileError(f"{label}: {err}") from err
    _probe_metrics(src, pair)
    return pair


def _probe_metrics(src: _Source, pair: ProjectivePair) -> None:
    """Reject pairs whose metrics cannot be evaluated anywhere in the domain.

    Isolated bad points (a coordinate singularity, say) are a runtime matter
    and are left to the checks; a metric that fails at the center and at
    every probe is a broken file.
    """
    center = tuple(
        (lo + hi) / 2 for lo, hi in (pair.domain[c] for c in pair.coordinates)
    )
    rng = np.random.default_rng(0)
    points = [center] + [pair.sample_point(rng) for _ in range(4)]
    for key, metric in (("g", pair.g), ("gbar", pair.gbar)):
        last = None
        for p in points:
            try:
                metric.values(p)
                break
            except (DegenerateMetricError, ExpressionError) as err:
                last = err
        else:
            src.fail(f"{key} cannot be evaluated anywhere in the domain: {last}",
                     (key,))


def load_pair(path) -> ProjectivePair:
    """Load a metric pair from a file path."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise PairFileError(f"cannot read {p}: {err.strerror or err}") from err
    pair = parse_pair(text, label=str(p))
    if pair.name is None:
        pair.name = p.stem
    return pair


def dump_pair(pair: ProjectivePair) -> str:
    """Render a pair back to file text (lower-triangle form)."""
    doc = {
        "dim": pair.dim,
        "coords": list(pair.coordinates),
        "g": [
            [pair.g.component_texts[i][j] for j in range(i + 1)]
            for i in range(pair.dim)
        ],
        "gbar": [
            [pair.gbar.component_texts[i][j] for j in range(i + 1)]
            for i in range(pair.dim)
        ],
        "domain": {c: list(pair.domain[c]) for c in pair.coordinates}
        if pair.domain
        else None,
    }
    if doc["domain"] is None:
        del doc["domain"]
    if pair.name:
        doc["name"] = pair.name
    if pair.notes:
        doc["notes"] = pair.notes
    out = io.StringIO()
    yaml.safe_dump(doc, out, sort_keys=False, default_flow_style=None)
    return out.getvalue()
