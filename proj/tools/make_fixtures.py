#!/usr/bin/env python3
"""Writes the bundled fixtures under data/."""
import json
import pathlib
import subprocess
import sys

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def dump(name, obj):
    (DATA / name).write_text(json.dumps(obj, indent=1) + "\n")


def node(i, pmin, pmax, qmin=0.0, qmax=0.0, c1=0.0, c2=0.0, ref=False):
    return dict(id=i, pressure_min=pmin, pressure_max=pmax, injection_min=qmin,
                injection_max=qmax, cost_linear=c1, cost_quadratic=c2, is_reference=ref)


def edge(a, b, w, s, psi0, kind="passive", rmin=0.0, rmax=0.0, b_=0.0, valve=False):
    return dict(frm=a, to=b, friction=w, linepack_factor=s, kind=kind, regulation_min=rmin,
                regulation_max=rmax, gas_factor=b_, initial_linepack=psi0, has_binary_valve=valve)


def fix(e):
    e = dict(e)
    e["from"] = e.pop("frm")
    return e


def single_pipe():
    net = dict(
        nodes=[node("a", 4.0, 6.0, 0.0, 20.0, 10.0, 0.5, ref=True), node("b", 3.0, 6.0)],
        edges=[fix(edge("a", "b", 1.0, 0.2, 0.85))])
    dump("single_pipe_network.json", net)
    dump("single_pipe_demand.json", dict(extraction=[{"b": 3.0}, {"b": 3.0}], reference_pressure=5.0))
    unc = dict(horizon=2, stage_dims=[1, 1], mean=[1.0, 1.0],
               covariance=[[0.0, 0.0], [0.0, 0.01]],
               node_order=["a", "b"],
               delta=[[[0.0], [3.0]], [[0.0, 0.0], [2.5, 0.5]]],
               risk_individual=0.05)
    dump("single_pipe_uncertainty.json", unc)


def triangle():
    net = dict(
        nodes=[node("n1", 4.5, 5.5, 0.0, 30.0, 10.0, 0.2, ref=True),
               node("n2", 3.5, 6.5, 0.0, 5.0, 14.0, 0.5),
               node("n3", 3.0, 6.0)],
        edges=[fix(edge("n1", "n2", 1.5, 0.3, 1.5, "compressor", 0.0, 400.0, 0.01)),
               fix(edge("n1", "n3", 0.8, 0.3, 1.4)),
               fix(edge("n2", "n3", 1.0, 0.3, 1.4))])
    dump("triangle_network.json", net)
    dump("triangle_demand.json",
         dict(extraction=[{"n3": 4.0}, {"n3": 4.5}, {"n3": 4.0}], reference_pressure=5.0))
    # stage dims 1, 2, 2: zeta = (1, a2, b2, a3, b3)
    mean = [1.0, 1.0, 1.0, 1.0, 1.0]
    var = 0.02
    cov = [[0.0] * 5 for _ in range(5)]
    for i in range(1, 5):
        cov[i][i] = var
    cov[1][2] = cov[2][1] = 0.3 * var
    d1 = [[0.0], [0.0], [4.0]]
    d2 = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [3.5, 0.6, 0.4]]
    d3 = [[0.0] * 5, [0.0] * 5, [2.0, 0.4, 0.3, 0.8, 0.5]]
    unc = dict(horizon=3, stage_dims=[1, 2, 2], mean=mean, covariance=cov,
               node_order=["n1", "n2", "n3"], delta=[d1, d2, d3], risk_individual=0.05)
    dump("triangle_uncertainty.json", unc)


def nid(i):
    return "n%02d" % i


PSCALE = 2.0
CCGT = [10, 14, 16, 24, 27, 31, 38, 40, 47]
SUPPLY = {1: (0.0, 500.0, 3.0, 0.004), 20: (0.0, 120.0, 4.0, 0.01),
          35: (0.0, 100.0, 5.0, 0.015), 45: (0.0, 60.0, 6.0, 0.02)}
COMPRESSORS = {(2, 3), (6, 7), (8, 29), (12, 41), (22, 23), (17, 18)}
CONTROL_VALVES = {(9, 10), (33, 34)}
BINARY_VALVES = {(29, 30), (28, 37)}


def base_edges():
    e = [(i, i + 1) for i in range(1, 16)]
    e += [(4, 17)] + [(i, i + 1) for i in range(17, 28)]
    e += [(8, 29)] + [(i, i + 1) for i in range(29, 40)]
    e += [(12, 41)] + [(i, i + 1) for i in range(41, 48)]
    e += [(28, 37), (16, 40), (24, 44)]
    return e


def tree_flows():
    """Flows on the spanning tree (loop edges dropped) when n01 feeds every demand."""
    demand = dict(base_demand())
    for i in CCGT:
        demand[i] = 11.0
    tree = [e for e in base_edges() if e not in {(28, 37), (16, 40), (24, 44)}]
    children = {}
    for a, b in tree:
        children.setdefault(a, []).append(b)

    flows = {}

    def load(n):
        tot = demand.get(n, 0.0)
        for c in children.get(n, []):
            f = load(c)
            flows[(n, c)] = f
            tot += f
        return tot

    load(1)
    return flows


def base_demand():
    d = {}
    for i in range(2, 49):
        if i in SUPPLY or i in CCGT:
            continue
        d[i] = 2.0 + (i * 7 % 5)
    return d


def network48(psi0=None):
    nodes = []
    for i in range(1, 49):
        if i in SUPPLY:
            lo, hi, c1, c2 = SUPPLY[i]
        else:
            lo = hi = c1 = c2 = 0.0
        pmin, pmax = (5.0, 6.5) if i == 1 else (4.5, 7.0)
        pmin, pmax = pmin * PSCALE, pmax * PSCALE
        nodes.append(node(nid(i), pmin, pmax, lo, hi, c1, c2, ref=(i == 1)))
    flows = tree_flows()
    edges = []
    for k, (a, b) in enumerate(base_edges()):
        w = max(flows.get((a, b), 0.0), 30.0) ** 2 / (0.8 * PSCALE ** 2)
        s = 1.5 / PSCALE
        kind, rmin, rmax, gf = "passive", 0.0, 0.0, 0.0
        if (a, b) in COMPRESSORS:
            kind, rmin, rmax, gf = "compressor", 0.0, 1500.0 * PSCALE, 0.005 / PSCALE
        if (a, b) in CONTROL_VALVES:
            kind, rmin, rmax, gf = "control_valve", -1500.0 * PSCALE, 0.0, 0.0
        p0 = 0.0 if psi0 is None else psi0[k]
        edges.append(fix(edge(nid(a), nid(b), w, 0.0 if psi0 is None else s, p0, kind, rmin, rmax,
                              gf, (a, b) in BINARY_VALVES)))
    return dict(nodes=nodes, edges=edges)


def stub48():
    T, Z = 5, 3
    wind_mean = [[120.0, 105.0, 90.0, 75.0, 60.0], [100.0, 90.0, 80.0, 70.0, 60.0],
                 [80.0, 70.0, 60.0, 50.0, 40.0]]
    units = []
    for m, i in enumerate(CCGT):
        share = [0.0, 0.0, 0.0]
        share[m % 3] = 1.0 / 3.0
        load = [150.0 + 10.0 * t for t in range(T)]
        units.append(dict(node=nid(i), heat_rate=0.1, load=load, participation=share))
    return dict(stages=T, zones=Z, wind_mean=wind_mean, wind_step=[25.0, 25.0, 25.0], units=units,
                variance=0.15, risk_individual=0.005,
                base_demand={nid(i): [v] * T for i, v in base_demand().items()})


def demand48(unc):
    T = unc["horizon"]
    order = unc["node_order"]
    ext = []
    for t in range(T):
        D = unc["delta"][t]
        mean = unc["mean"][: len(D[0])]
        row = {}
        for n, r in zip(order, D):
            v = sum(a * b for a, b in zip(r, mean))
            if abs(v) > 0:
                row[n] = v
        ext.append(row)
    return dict(extraction=ext, reference_pressure=6.0 * PSCALE)


def case48(cli):
    tmp = DATA / "tmp48"
    tmp.mkdir(exist_ok=True)
    dump("tmp48/net0.json", network48())
    dump("tmp48/stub.json", stub48())
    subprocess.run([cli, "stub-uncertainty", "--network", str(tmp / "net0.json"), "--stub",
                    str(tmp / "stub.json"), "--out", str(DATA / "case48_uncertainty.json")], check=True)
    unc = json.loads((DATA / "case48_uncertainty.json").read_text())
    dump("case48_demand.json", demand48(unc))
    # linepack-free solve gives the pressures behind the initial linepack
    subprocess.run([cli, "steady-state", "--network", str(tmp / "net0.json"), "--demand",
                    str(DATA / "case48_demand.json"), "--out", str(tmp / "ss0.json")], check=True)
    ss = json.loads((tmp / "ss0.json").read_text())
    p = ss["stages"][0]["pressure"]
    kap = ss["stages"][0]["regulation_kpa"]
    idx = {n: k for k, n in enumerate(ss["nodes"])}
    psi0 = []
    for k, (a, b) in enumerate(base_edges()):
        l = ss["edges"].index([nid(a), nid(b)])
        psi0.append(0.98 * 0.5 * 1.5 / PSCALE * (p[idx[nid(a)]] + p[idx[nid(b)]] + kap[l] / 1000.0))
    dump("case48_network.json", network48(psi0))
    for f in tmp.iterdir():
        f.unlink()
    tmp.rmdir()


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    single_pipe()
    triangle()
    if len(sys.argv) > 1:
        case48(sys.argv[1])
