"""File formats: SHNF field snapshots, CSV tables, SVG polylines and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .spectral import ModalField, SpectralBasis, build_basis

MAGIC = b"SHNF"
VERSION = 1
_HEAD = struct.Struct("<4sIdI")


def write_shnf(path, f: ModalField) -> None:
    b = f.basis
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, b.L, b.N))
        fh.write(np.asarray(f.xi, dtype="<f8").tobytes())


def read_shnf(path, basis: SpectralBasis | None = None) -> ModalField:
    """Read a snapshot; a given basis must match the stored (L, N)."""
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise ValueError("truncated SHNF header")
    magic, version, L, N = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported SHNF version {version}")
    body = data[_HEAD.size:]
    if len(body) != 8 * N * N:
        raise ValueError(f"expected {N * N} coefficients, found {len(body) / 8:g}")
    if basis is None:
        basis = build_basis(L, N)
    elif basis.N != N or basis.L != L:
        raise ValueError(f"snapshot has (L, N) = ({L}, {N}), basis has ({basis.L}, {basis.N})")
    return ModalField(basis, np.frombuffer(body, dtype="<f8").astype(float))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: list[str], rows, comment: str | None = None) -> None:
    """Rows of numbers; floats written with repr so they round-trip exactly."""
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(x) for x in r] for r in reader if r]
    return header, np.array(rows).reshape(len(rows), len(header))


def svg_polyline(path, series: dict[str, tuple[np.ndarray, np.ndarray]], title: str = "",
                 xlabel: str = "", ylabel: str = "", logy: bool = False, markers: bool = False,
                 width: int = 480, height: int = 320) -> None:
    """Minimal line chart: one polyline (optionally with point markers) per series."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
    pad = 50
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    tr = (lambda v: np.log10(np.maximum(v, 1e-300))) if logy else (lambda v: v)
    ys_t = tr(ys)
    ok = np.isfinite(xs) & np.isfinite(ys_t)
    x0, x1 = (xs[ok].min(), xs[ok].max()) if ok.any() else (0.0, 1.0)
    y0, y1 = (ys_t[ok].min(), ys_t[ok].max()) if ok.any() else (0.0, 1.0)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x, y):
        return (pad + (x - x0) / (x1 - x0) * (width - 2 * pad),
                height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})"'
           f' text-anchor="middle">{ylabel}{" (log10)" if logy else ""}</text>',
           f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{x0:.3g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{x1:.3g}</text>',
           f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
           f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>']
    for n, (name, (x, y)) in enumerate(series.items()):
        c = colors[n % len(colors)]
        pts = [px(a, b) for a, b in zip(np.asarray(x, float), tr(np.asarray(y, float)))
               if np.isfinite(a) and np.isfinite(b)]
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{c}" points="{coords}"/>')
        if markers:
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{c}"/>' for a, b in pts]
        out.append(f'<text x="{width - pad}" y="{pad + 14 * n}" font-size="11" fill="{c}"'
                   f' text-anchor="end">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seeds: list[int]
    versions: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    wall_clock: float = 0.0
    summary: dict = field(default_factory=dict)

    @staticmethod
    def current_versions() -> dict:
        import scipy

        from . import __version__
        return {"stochshe": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                "python": platform.python_version()}

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
