"""
Report Writers
==============
Fixed-layout output files:

- metrics.json: confusion matrix, rates, threshold and run context
- roc.csv: fpr,tpr,threshold
- importance.csv: feature,relative,scaled,percentage
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

import pandas as pd

from .metrics import ClassMetrics, ConfusionMatrix
from .roc import RocCurve

logger = logging.getLogger(__name__)

ROC_COLUMNS = ['fpr', 'tpr', 'threshold']
IMPORTANCE_COLUMNS = ['feature', 'relative', 'scaled', 'percentage']


def metrics_payload(cm: ConfusionMatrix, metrics: ClassMetrics, threshold: float,
                    auc: Optional[float] = None, **context: Any) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        'confusion_matrix': cm.to_dict(),
        'metrics': metrics.to_dict(),
        'threshold': threshold,
        'n': cm.n,
    }
    if auc is not None:
        payload['auc'] = auc
    payload.update(context)
    return payload


def write_metrics_json(path: Union[str, Path], payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write('\n')
    logger.info(f"✓ Wrote {path}")
    return path


def write_roc_csv(path: Union[str, Path], roc: RocCurve) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([(p.fpr, p.tpr, p.threshold) for p in roc.points], columns=ROC_COLUMNS)
    frame.to_csv(path, index=False, lineterminator='\n')
    logger.info(f"✓ Wrote {path} ({len(frame)} points, AUC {roc.auc:.4f})")
    return path


def write_importance_csv(path: Union[str, Path], rows: Iterable[Any]) -> Path:
    """rows: objects with feature, relative, scaled and percentage attributes"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(row.feature, row.relative, row.scaled, row.percentage) for row in rows],
        columns=IMPORTANCE_COLUMNS,
    )
    frame.to_csv(path, index=False, lineterminator='\n')
    logger.info(f"✓ Wrote {path} ({len(frame)} features)")
    return path
