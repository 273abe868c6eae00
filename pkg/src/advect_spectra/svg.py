"""Self-contained SVG plot of eigenvalue loci against the unit circle."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .fourier import Spectrum

BOX = 1.2
SIZE = 480
MARGIN = 40
BRANCH_COLORS = ("#1f77b4", "#d62728")


def _xy(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = SIZE / (2 * BOX)
    x = MARGIN + (np.real(z) + BOX) * scale
    y = MARGIN + (BOX - np.imag(z)) * scale
    return x, y


def locus_svg(spec: Spectrum, cfl: float, timestamp: str | None = None) -> str:
    """One circle per eigenvalue sample (2 * n_theta points), both branches.

    Points outside the [-1.2, 1.2]^2 box are clipped by the viewport but
    still emitted, so the point count always matches the spectrum.
    """
    total = SIZE + 2 * MARGIN
    scale = SIZE / (2 * BOX)
    cx, cy = MARGIN + BOX * scale, MARGIN + BOX * scale
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if timestamp:
        out.append(f"<!-- generated {escape(timestamp)} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total + 40}" '
               f'viewBox="0 0 {total} {total + 40}">')
    out.append(f'<clipPath id="box"><rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" '
               f'height="{SIZE}"/></clipPath>')
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" '
               'fill="white" stroke="black"/>')
    out.append(f'<line x1="{MARGIN}" y1="{cy:.3f}" x2="{MARGIN + SIZE}" y2="{cy:.3f}" '
               'stroke="#bbbbbb"/>')
    out.append(f'<line x1="{cx:.3f}" y1="{MARGIN}" x2="{cx:.3f}" y2="{MARGIN + SIZE}" '
               'stroke="#bbbbbb"/>')
    out.append(f'<circle class="unit-circle" cx="{cx:.3f}" cy="{cy:.3f}" r="{scale:.3f}" '
               'fill="none" stroke="black" stroke-dasharray="4 3"/>')
    for label, z, color in (("rho1", spec.rho1, BRANCH_COLORS[0]),
                            ("rho2", spec.rho2, BRANCH_COLORS[1])):
        xs, ys = _xy(z)
        out.append(f'<g class="{label}" fill="{color}" clip-path="url(#box)">')
        out.extend(f'<circle class="pt" cx="{x:.3f}" cy="{y:.3f}" r="1.5"/>'
                   for x, y in zip(xs, ys))
        out.append("</g>")
    ticks = [-1.0, 0.0, 1.0]
    for t in ticks:
        x, _ = _xy(np.array([t]))
        _, y = _xy(np.array([1j * t]))
        out.append(f'<text x="{x[0]:.3f}" y="{MARGIN + SIZE + 16}" font-size="11" '
                   f'text-anchor="middle">{t:g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{y[0] + 4:.3f}" font-size="11" '
                   f'text-anchor="end">{t:g}</text>')
    legend_y = total + 20
    out.append(f'<text class="legend" x="{MARGIN}" y="{legend_y}" font-size="13">'
               f'{escape(spec.scheme_id)}, CFL = {cfl:g}: '
               f'<tspan fill="{BRANCH_COLORS[0]}">physical</tspan> / '
               f'<tspan fill="{BRANCH_COLORS[1]}">spurious</tspan></text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
