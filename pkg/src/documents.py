"""JSON result documents for periodograms, smoothed estimators and model spectra"""

import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.inference import ConfidenceBand
from src.models import LevelGrid, QSpecError, QSpecQuantity, format_value_table


SCHEMA_VERSION = 1


class DocumentError(QSpecError, ValueError):
    """Raised for unreadable, malformed or wrong-version result documents"""
    pass


def build_metadata(argv: Optional[Sequence[str]] = None, seed: Optional[int] = None) -> Dict:
    """Invocation record stored with every document"""
    from src import __version__

    args = list(argv) if argv is not None else sys.argv[1:]
    return {
        "command_line": "qspec " + " ".join(args),
        "seed": seed,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
    }


@dataclass(eq=False)
class ResultDocument:
    """
    One lattice with its grid, levels and provenance.

    values has shape (J, K1, K2, B+1); on disk it is nested as [b][j][k1][k2] with
    each complex number written as [re, im].
    """
    kind: str
    n: int
    grid: List[int]
    frequency_kind: str
    levels1: List[float]
    levels2: List[float]
    values: np.ndarray
    metadata: Dict = field(default_factory=dict)
    ci: Optional[Dict] = None
    extras: Dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.asarray(self.grid) / self.n

    @property
    def B(self) -> int:
        return self.values.shape[3] - 1

    @property
    def levels(self) -> LevelGrid:
        return LevelGrid(tuple(self.levels1), tuple(self.levels2))

    def to_quantity(self) -> QSpecQuantity:
        return QSpecQuantity(
            n=self.n,
            grid=np.asarray(self.grid),
            levels=self.levels,
            values=self.values,
            frequency_kind=self.frequency_kind,
        )

    def confidence_band(self) -> Optional[ConfidenceBand]:
        if self.ci is None:
            return None
        return ConfidenceBand.from_dict(self.ci, self.n, np.asarray(self.grid), self.levels)

    def summary(self, digits: int = 3) -> str:
        lines = [
            f"{self.kind} (J={len(self.grid)}, K1={len(self.levels1)}, "
            f"K2={len(self.levels2)}, B+1={self.B + 1})",
            f"n = {self.n}, frequencies: {self.frequency_kind}",
            "Levels 1   :  " + " ".join(f"{x:g}" for x in self.levels1),
            "Levels 2   :  " + " ".join(f"{x:g}" for x in self.levels2),
        ]
        if self.metadata.get("command_line"):
            lines.append(f"Created by : {self.metadata['command_line']}")
        if self.ci is not None:
            lines.append(f"CI         : {self.ci['method']} (alpha={self.ci['alpha']:g})")
        lines.append("")
        lines.append("Values (level 1 = first level):")
        lines.extend(format_value_table(self.frequencies, self.levels2, self.values[:, 0, :, 0], digits))
        return "\n".join(lines)

    def to_dict(self) -> Dict:
        nested = np.stack([self.values.real, self.values.imag], axis=-1).transpose(3, 0, 1, 2, 4)
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "metadata": self.metadata,
            "n": self.n,
            "grid": [int(s) for s in self.grid],
            "frequency_kind": self.frequency_kind,
            "frequencies": [float(w) for w in self.frequencies],
            "levels1": [float(x) for x in self.levels1],
            "levels2": [float(x) for x in self.levels2],
            "values": nested.tolist(),
            "ci": self.ci,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ResultDocument":
        if not isinstance(data, dict):
            raise DocumentError("Result document must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DocumentError(f"Unsupported schema version {version} (expected {SCHEMA_VERSION})")
        try:
            raw = np.asarray(data["values"], dtype=np.float64)
            if raw.ndim != 5 or raw.shape[-1] != 2:
                raise DocumentError(f"Values must be nested [b][j][k1][k2][re, im], got shape {raw.shape}")
            values = (raw[..., 0] + 1j * raw[..., 1]).transpose(1, 2, 3, 0)
            doc = cls(
                kind=str(data["kind"]),
                n=int(data["n"]),
                grid=[int(s) for s in data["grid"]],
                frequency_kind=str(data["frequency_kind"]),
                levels1=[float(x) for x in data["levels1"]],
                levels2=[float(x) for x in data["levels2"]],
                values=values,
                metadata=dict(data.get("metadata") or {}),
                ci=data.get("ci"),
                extras=dict(data.get("extras") or {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, DocumentError):
                raise
            raise DocumentError(f"Malformed result document: {e}") from e
        expected = (len(doc.grid), len(doc.levels1), len(doc.levels2))
        if doc.values.shape[:3] != expected:
            raise DocumentError(f"Values shape {doc.values.shape} does not match lattice {expected}")
        return doc


def from_quantity(
    q: QSpecQuantity,
    metadata: Optional[Dict] = None,
    ci: Optional[ConfidenceBand] = None,
    extras: Optional[Dict] = None,
    kind: Optional[str] = None,
) -> ResultDocument:
    return ResultDocument(
        kind=kind or q.label,
        n=q.n,
        grid=[int(s) for s in q.grid],
        frequency_kind=q.frequency_kind,
        levels1=list(q.levels.levels1),
        levels2=list(q.levels.levels2),
        values=np.asarray(q.values),
        metadata=metadata or {},
        ci=ci.to_dict() if ci is not None else None,
        extras=extras or {},
    )


def write_document(doc: ResultDocument, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc.to_dict(), indent=2))
    return path


def read_document(path: Union[str, Path]) -> ResultDocument:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DocumentError(f"Cannot read result document {path}: {e}") from e
    return ResultDocument.from_dict(data)
