"""Regenerates ieee39.json and ieee39_gfl.json.

Network and operating point come from the MATPOWER/PYPOWER case39 table
(power flow data for the 39-bus New England system). Machine data are the
classical-model values (H, x'd on the 100 MVA base) of the same benchmark.
Needs pypower importable.
"""
import json
import sys
from pathlib import Path

from pypower.case39 import case39

# bus: (H in s, x'd in pu on 100 MVA)
MACHINES = {
    30: (42.0, 0.031),
    31: (30.3, 0.0697),
    32: (35.8, 0.0531),
    33: (28.6, 0.0436),
    34: (26.0, 0.132),
    35: (34.8, 0.05),
    36: (26.4, 0.049),
    37: (24.3, 0.057),
    38: (34.5, 0.057),
    39: (500.0, 0.006),
}
GFL_BUSES = (33, 34, 36)
GFL = dict(t=0.01, tf=0.1, r=0.05, omega_ref=1.0)
KIND = {1: "pq", 2: "pv", 3: "slack"}


def build(gfl):
    c = case39()
    base = float(c["baseMVA"])
    gens = {int(g[0]): g for g in c["gen"]}
    buses = []
    for b in c["bus"]:
        bid = int(b[0])
        bus = {"id": bid, "kind": KIND[int(b[1])]}
        if bid in gens:
            g = gens[bid]
            bus["v"] = float(g[5])
            bus["p_gen"] = float(g[1]) / base
            bus["q_gen"] = float(g[2]) / base
        for key, col in (("p_load", 2), ("q_load", 3), ("g_shunt", 4), ("b_shunt", 5)):
            if b[col] != 0.0:
                bus[key] = float(b[col]) / base
        buses.append(bus)
    branches = []
    for br in c["branch"]:
        e = {"from": int(br[0]), "to": int(br[1]), "r": float(br[2]), "x": float(br[3]), "b": float(br[4])}
        if br[8] != 0.0:
            e["tap"] = float(br[8])
        if br[9] != 0.0:
            e["shift"] = float(br[9])
        branches.append(e)
    devices = []
    for bid, (h, xd1) in sorted(MACHINES.items()):
        if gfl and bid in GFL_BUSES:
            devices.append({"type": "gfl", "bus": bid, **GFL})
        else:
            devices.append({"type": "sm2", "bus": bid, "m": 2.0 * h, "xd1": xd1})
    for bus in buses:
        if bus.get("p_load", 0.0) != 0.0 or bus.get("q_load", 0.0) != 0.0:
            devices.append({"type": "zload", "bus": bus["id"]})
    name = "ieee39_gfl" if gfl else "ieee39"
    prov = (
        "IEEE 39-bus New England test system. Bus, branch and generator dispatch data from the "
        "MATPOWER case39 table; classical machine data (H, x'd, 100 MVA base) from the IEEE PES "
        "task-force benchmark report. m = 2H, ra = 0, d = 0. Every loaded bus carries a constant "
        "impedance load sized at the power-flow solution. Line charging and transformer taps are "
        "included; there are no bus shunts."
    )
    if gfl:
        prov += " Machines at buses 33, 34 and 36 are replaced by grid-following converters."
    return {
        "name": name,
        "provenance": prov,
        "base": {"mva": base, "f0": 60.0},
        "buses": buses,
        "branches": branches,
        "devices": devices,
    }


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
    for gfl in (False, True):
        case = build(gfl)
        (out / f"{case['name']}.json").write_text(json.dumps(case, indent=1) + "\n")
