"""Deterministic SVG rendering of scenarios.

Obstacles are gray, the anchor blue, the robot red, the focus tether black;
other robots' tethers are drawn thinner in dark gray.
"""


def _fmt(x):
    return f"{float(x):.6g}"


def scenario_svg(scenario):
    env = scenario.environment
    lo, hi = env.lo, env.hi
    w = hi[0] - lo[0]
    h = hi[1] - lo[1]
    stroke = w / 320
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(w)} {_fmt(h)}" '
        f'width="640" height="{_fmt(640 * h / w)}">',
        f'<g transform="translate(0,{_fmt(h)}) scale(1,-1)">',
        f'<rect id="workspace" x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}" '
        f'fill="#ffffff" stroke="#000000" stroke-width="{_fmt(stroke)}"/>',
    ]
    for k, obs in enumerate(env.obstacles):
        pts = " ".join(f"{_fmt(x - lo[0])},{_fmt(y - lo[1])}" for x, y in obs.vertices)
        parts.append(
            f'<polygon id="obstacle-{k}" points="{pts}" fill="#999999" '
            f'stroke="#555555" stroke-width="{_fmt(stroke / 2)}"/>'
        )
    for rid, cfg in scenario.robots:
        if rid == scenario.focus:
            continue
        pts = " ".join(f"{_fmt(x - lo[0])},{_fmt(y - lo[1])}" for x, y in cfg.path.vertices)
        parts.append(
            f'<polyline id="tether-{rid}" points="{pts}" fill="none" '
            f'stroke="#666666" stroke-width="{_fmt(stroke)}" stroke-dasharray="{_fmt(stroke * 3)}"/>'
        )
    focus = scenario.focus_tether
    pts = " ".join(f"{_fmt(x - lo[0])},{_fmt(y - lo[1])}" for x, y in focus.path.vertices)
    parts.append(
        f'<polyline id="tether-{scenario.focus}" points="{pts}" fill="none" '
        f'stroke="#000000" stroke-width="{_fmt(stroke * 1.5)}"/>'
    )
    ax, ay = focus.anchor
    rx, ry = focus.robot
    r = w / 100
    parts.append(
        f'<circle id="anchor" cx="{_fmt(ax - lo[0])}" cy="{_fmt(ay - lo[1])}" r="{_fmt(r)}" fill="#2255dd"/>'
    )
    parts.append(
        f'<circle id="robot" cx="{_fmt(rx - lo[0])}" cy="{_fmt(ry - lo[1])}" r="{_fmt(r)}" fill="#dd2222"/>'
    )
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"
