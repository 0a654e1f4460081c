"""
Model File
==========
Line-oriented text format, byte-stable for a given forest:

    taskseer-forest v1
    fingerprint <schema fingerprint>
    config <canonical JSON>
    features <canonical JSON: name, kind, categories>
    trees <count>
    tree <index>
    <nodes in preorder>
    end
    checksum <sha256 of every preceding byte>

Node lines:

    L <n_failed> <n_succeeded>
    T <column> <threshold> <L|R> <gain> <weight>
    C <column> <id,id,...> <L|R> <gain> <weight>

Floats are written with repr(). The whole file is parsed and checked before
a Forest is built.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Union

from dataset.builder import FeatureKind
from utils.helpers import canonical_json
from .config import ForestConfig, ForestError
from .encoding import FeatureEncoding
from .model import Forest, SchemaMismatchError
from .tree import Internal, Leaf, Side, Split, TreeNode

logger = logging.getLogger(__name__)

MODEL_FORMAT = 'taskseer-forest v1'


class ModelFormatError(ForestError):
    """Model file is corrupt, truncated or of an unknown version"""


def _side_code(side: Side) -> str:
    return 'L' if side is Side.LEFT else 'R'


def _write_node(node: TreeNode, column: dict, lines: List[str]) -> None:
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Leaf):
            lines.append(f"L {current.n_failed!r} {current.n_succeeded!r}")
            continue
        split = current.split
        if split.threshold is not None:
            rule = f"T {column[split.feature]} {split.threshold!r}"
        else:
            rule = f"C {column[split.feature]} {','.join(str(c) for c in sorted(split.categories))}"
        lines.append(f"{rule} {_side_code(split.missing_goes)} {current.gain!r} {current.weight!r}")
        stack.append(current.right)
        stack.append(current.left)


def dumps_model(forest: Forest) -> str:
    features = [
        {'name': e.name, 'kind': e.kind.value, 'categories': list(e.categories)}
        for e in forest.encodings
    ]
    lines = [
        MODEL_FORMAT,
        f"fingerprint {forest.fingerprint}",
        f"config {canonical_json(forest.config.to_dict())}",
        f"features {canonical_json(features)}",
        f"trees {len(forest.trees)}",
    ]
    for index, tree in enumerate(forest.trees):
        lines.append(f"tree {index}")
        _write_node(tree, forest.column, lines)
        lines.append('end')
    body = '\n'.join(lines) + '\n'
    digest = hashlib.sha256(body.encode('utf-8')).hexdigest()
    return f"{body}checksum {digest}\n"


def save_model(forest: Forest, path: Union[str, Path]) -> Path:
    """Write the model file atomically (temp file + rename)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dumps_model(forest))
    os.replace(tmp, path)
    logger.info(f"✓ Saved model ({len(forest.trees)} trees) to {path}")
    return path


def _expect(lines: Iterator[str], prefix: str) -> str:
    line = next(lines)
    if not line.startswith(prefix + ' '):
        raise ModelFormatError(f"expected '{prefix}' line, found {line[:40]!r}")
    return line[len(prefix) + 1:]


def _read_node(lines: Iterator[str], encodings: Sequence[FeatureEncoding]) -> TreeNode:
    parts = next(lines).split(' ')
    tag = parts[0]
    if tag == 'L' and len(parts) == 3:
        return Leaf(float(parts[1]), float(parts[2]))
    if tag not in ('T', 'C') or len(parts) != 6:
        raise ModelFormatError(f"malformed node line: {' '.join(parts)[:60]!r}")

    encoding = encodings[int(parts[1])]
    if parts[3] not in ('L', 'R'):
        raise ModelFormatError(f"bad missing side {parts[3]!r}")
    side = Side.LEFT if parts[3] == 'L' else Side.RIGHT
    if tag == 'T':
        if not encoding.is_numeric:
            raise ModelFormatError(f"threshold split on non-numeric column {encoding.name}")
        split = Split(feature=encoding.name, threshold=float(parts[2]), missing_goes=side)
    else:
        categories = frozenset(int(c) for c in parts[2].split(','))
        if encoding.is_numeric or not all(0 <= c < len(encoding.categories) for c in categories):
            raise ModelFormatError(f"bad category subset on column {encoding.name}")
        split = Split(feature=encoding.name, categories=categories, missing_goes=side)
    left = _read_node(lines, encodings)
    right = _read_node(lines, encodings)
    return Internal(split=split, left=left, right=right, gain=float(parts[4]), weight=float(parts[5]))


def loads_model(text: str, expected_fingerprint: Optional[str] = None) -> Forest:
    """
    Parse a model file body

    Raises:
        ModelFormatError: Wrong version, bad checksum or malformed content
        SchemaMismatchError: expected_fingerprint given and different
    """
    if not text.startswith(MODEL_FORMAT + '\n'):
        first = text.split('\n', 1)[0]
        raise ModelFormatError(f"unsupported model format {first[:40]!r}")
    body, marker, tail = text.rpartition('checksum ')
    if not marker or hashlib.sha256(body.encode('utf-8')).hexdigest() != tail.strip():
        raise ModelFormatError("model checksum mismatch (corrupted or truncated file)")

    lines = iter(body.rstrip('\n').split('\n')[1:])
    try:
        fingerprint = _expect(lines, 'fingerprint')
        config = ForestConfig.from_dict(json.loads(_expect(lines, 'config')))
        encodings = tuple(
            FeatureEncoding(item['name'], FeatureKind(item['kind']), tuple(item['categories']))
            for item in json.loads(_expect(lines, 'features'))
        )
        n_trees = int(_expect(lines, 'trees'))
        trees = []
        for index in range(n_trees):
            if int(_expect(lines, 'tree')) != index:
                raise ModelFormatError(f"tree {index} out of order")
            trees.append(_read_node(lines, encodings))
            if next(lines) != 'end':
                raise ModelFormatError(f"tree {index} has trailing nodes")
        if next(lines, None) is not None:
            raise ModelFormatError("unexpected content after the last tree")
        forest = Forest(trees=tuple(trees), config=config, encodings=encodings, fingerprint=fingerprint)
    except ModelFormatError:
        raise
    except (StopIteration, ValueError, KeyError, IndexError, TypeError, ForestError) as e:
        raise ModelFormatError(f"malformed model file: {e}") from e

    if expected_fingerprint is not None and expected_fingerprint != forest.fingerprint:
        raise SchemaMismatchError(
            f"model schema {forest.fingerprint} does not match dataset schema {expected_fingerprint}"
        )
    return forest


def load_model(path: Union[str, Path], expected_fingerprint: Optional[str] = None) -> Forest:
    """
    Read a model file written by save_model

    Args:
        path: Model file
        expected_fingerprint: Schema fingerprint the model must carry

    Returns:
        Forest
    """
    try:
        with open(path, 'rb') as handle:
            text = handle.read().decode('utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"cannot read model {path}: {e}") from e
    forest = loads_model(text, expected_fingerprint)
    logger.info(f"Loaded model ({len(forest.trees)} trees, {len(forest.encodings)} features) from {path}")
    return forest
