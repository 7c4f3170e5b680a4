#!/usr/bin/env python3
"""Writes the bundled district cases under data/cases/."""
import json
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "cases"

# 33-bus feeder (12.66 kV), ohms and kW/kvar; buses numbered from 1.
FEEDER33 = [
    (1, 2, 0.0922, 0.0470, 100, 60), (2, 3, 0.4930, 0.2511, 90, 40), (3, 4, 0.3660, 0.1864, 120, 80),
    (4, 5, 0.3811, 0.1941, 60, 30), (5, 6, 0.8190, 0.7070, 60, 20), (6, 7, 0.1872, 0.6188, 200, 100),
    (7, 8, 0.7114, 0.2351, 200, 100), (8, 9, 1.0300, 0.7400, 60, 20), (9, 10, 1.0440, 0.7400, 60, 20),
    (10, 11, 0.1966, 0.0650, 45, 30), (11, 12, 0.3744, 0.1238, 60, 35), (12, 13, 1.4680, 1.1550, 60, 35),
    (13, 14, 0.5416, 0.7129, 120, 80), (14, 15, 0.5910, 0.5260, 60, 10), (15, 16, 0.7463, 0.5450, 60, 20),
    (16, 17, 1.2890, 1.7210, 60, 20), (17, 18, 0.7320, 0.5740, 90, 40), (2, 19, 0.1640, 0.1565, 90, 40),
    (19, 20, 1.5042, 1.3554, 90, 40), (20, 21, 0.4095, 0.4784, 90, 40), (21, 22, 0.7089, 0.9373, 90, 40),
    (3, 23, 0.4512, 0.3083, 90, 50), (23, 24, 0.8980, 0.7091, 420, 200), (24, 25, 0.8960, 0.7011, 420, 200),
    (6, 26, 0.2030, 0.1034, 60, 25), (26, 27, 0.2842, 0.1447, 60, 25), (27, 28, 1.0590, 0.9337, 60, 20),
    (28, 29, 0.8042, 0.7006, 120, 70), (29, 30, 0.5075, 0.2585, 200, 600), (30, 31, 0.9744, 0.9630, 150, 70),
    (31, 32, 0.3105, 0.3619, 210, 100), (32, 33, 0.3410, 0.5302, 60, 40),
]
S_BASE_KVA = 10000.0
Z_BASE = 12.66 ** 2 / 10.0

DAILY_LOAD = [0.46, 0.42, 0.40, 0.39, 0.40, 0.44, 0.52, 0.60, 0.66, 0.70, 0.72, 0.73,
              0.74, 0.73, 0.71, 0.70, 0.72, 0.77, 0.82, 0.85, 0.83, 0.75, 0.64, 0.53]
SOLAR = [0, 0, 0, 0, 0, 0.03, 0.15, 0.33, 0.52, 0.70, 0.84, 0.93,
         0.97, 0.93, 0.84, 0.70, 0.52, 0.32, 0.12, 0.02, 0, 0, 0, 0]


def r6(x):
    return round(x, 6)


def case(district, steps, buses, branches, devices, rho0, rho_dg=0.5, rho_dis=0.05, rho_cha=0.05,
         v_min=0.95, v_max=1.05, s_max=1.0):
    return {
        "district": district,
        "horizon": {"T": steps, "dt_hours": 1.0},
        "buses": buses,
        "branches": branches,
        "devices": devices,
        "prices": {"rho0": rho0, "rho_dg": rho_dg, "rho_bess_dis": rho_dis, "rho_bess_cha": rho_cha},
        "limits": {"v_min": v_min, "v_max": v_max, "s_branch_max": s_max},
    }


def tou_prices(steps):
    return [0.3 if t < 7 else 0.8 if 17 <= t < 21 else 0.5 for t in range(steps)]


def toy():
    buses = [{"id": 0, "p_load": [0.0], "q_load": [0.0]}, {"id": 1, "p_load": [0.1], "q_load": [0.05]}]
    return case("toy", 1, buses, [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}], [], 0.4)


def toy_bess():
    # Cheap middle step makes charging then discharging worthwhile.
    steps = 3
    buses = [{"id": 0, "p_load": [0.0] * steps, "q_load": [0.0] * steps},
             {"id": 1, "p_load": [0.10, 0.08, 0.12], "q_load": [0.04, 0.03, 0.05]}]
    bess = {"kind": "bess", "bus": 1, "p_dis_max": 0.05, "p_cha_max": 0.05, "soc_min": 0.1, "soc_max": 0.9,
            "soc_init": 0.5, "eta": 0.9, "e_cap": 0.2}
    return case("toy_bess", steps, buses, [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}], [bess],
                [0.5, 0.1, 0.8], rho_dis=0.01, rho_cha=0.01)


def toy_full():
    steps = 3
    buses = [{"id": 0, "p_load": [0.0] * steps, "q_load": [0.0] * steps},
             {"id": 1, "p_load": [0.06, 0.05, 0.07], "q_load": [0.02, 0.02, 0.03]},
             {"id": 2, "p_load": [0.08, 0.07, 0.09], "q_load": [0.03, 0.02, 0.03]}]
    branches = [{"from": 0, "to": 1, "r": 0.01, "x": 0.02}, {"from": 1, "to": 2, "r": 0.015, "x": 0.02}]
    devices = [
        {"kind": "dg", "bus": 1, "p_min": 0.0, "p_max": 0.05, "q_min": -0.02, "q_max": 0.03, "r_max": 0.02},
        {"kind": "bess", "bus": 2, "p_dis_max": 0.03, "p_cha_max": 0.03, "soc_min": 0.1, "soc_max": 0.9,
         "soc_init": 0.5, "eta": 0.95, "e_cap": 0.1},
        {"kind": "pv", "bus": 2, "s_max": 0.05, "p_avail": [0.01, 0.04, 0.02], "curtailable": False},
        {"kind": "svc", "bus": 1, "q_max": 0.03},
    ]
    return case("toy_full", steps, buses, branches, devices, [0.4, 0.6, 0.5], rho_dg=0.45)


def hamlet():
    # Six-bus feeder: trunk 0-1-2-3 with laterals 1-4 and 4-5.
    steps = 24
    nominal = {1: (0.020, 0.010), 2: (0.030, 0.015), 3: (0.025, 0.012), 4: (0.015, 0.008), 5: (0.035, 0.018)}
    buses = [{"id": 0, "p_load": [0.0] * steps, "q_load": [0.0] * steps}]
    for i in range(1, 6):
        p, q = nominal[i]
        buses.append({"id": i, "p_load": [r6(p * DAILY_LOAD[t] / 0.85) for t in range(steps)],
                      "q_load": [r6(q * DAILY_LOAD[t] / 0.85) for t in range(steps)]})
    branches = [{"from": 0, "to": 1, "r": 0.04, "x": 0.03}, {"from": 1, "to": 2, "r": 0.06, "x": 0.04},
                {"from": 2, "to": 3, "r": 0.05, "x": 0.035}, {"from": 1, "to": 4, "r": 0.07, "x": 0.05},
                {"from": 4, "to": 5, "r": 0.05, "x": 0.04}]
    devices = [
        {"kind": "dg", "bus": 3, "p_min": 0.0, "p_max": 0.04, "q_min": -0.02, "q_max": 0.03, "r_max": 0.01,
         "p_init": 0.0},
        {"kind": "pv", "bus": 5, "s_max": 0.05, "p_avail": [r6(0.04 * s) for s in SOLAR], "curtailable": False},
        {"kind": "svc", "bus": 2, "q_max": 0.03},
    ]
    return case("hamlet", steps, buses, branches, devices, tou_prices(steps), rho_dg=0.55, s_max=0.2)


def harbor():
    # Twelve-bus feeder with every device class.
    steps = 24
    tree = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6), (6, 7), (7, 8), (1, 9), (9, 10), (10, 11)]
    imp = [(0.02, 0.015), (0.03, 0.02), (0.04, 0.03), (0.035, 0.025), (0.05, 0.035), (0.045, 0.03),
           (0.04, 0.03), (0.06, 0.04), (0.03, 0.02), (0.05, 0.035), (0.04, 0.03)]
    nominal = [0, 0.02, 0.025, 0.015, 0.02, 0.03, 0.018, 0.022, 0.016, 0.02, 0.024, 0.018]
    buses = [{"id": 0, "p_load": [0.0] * steps, "q_load": [0.0] * steps}]
    for i in range(1, 12):
        p = nominal[i]
        buses.append({"id": i, "p_load": [r6(p * DAILY_LOAD[t] / 0.85) for t in range(steps)],
                      "q_load": [r6(0.5 * p * DAILY_LOAD[t] / 0.85) for t in range(steps)]})
    branches = [{"from": a, "to": b, "r": r, "x": x} for (a, b), (r, x) in zip(tree, imp)]
    devices = [
        {"kind": "dg", "bus": 5, "p_min": 0.0, "p_max": 0.05, "q_min": -0.02, "q_max": 0.04, "r_max": 0.015},
        {"kind": "bess", "bus": 8, "p_dis_max": 0.03, "p_cha_max": 0.03, "soc_min": 0.1, "soc_max": 0.9,
         "soc_init": 0.5, "eta": 0.95, "e_cap": 0.12},
        {"kind": "pv", "bus": 11, "s_max": 0.06, "p_avail": [r6(0.05 * s) for s in SOLAR], "curtailable": True},
        {"kind": "svc", "bus": 4, "q_max": 0.03},
    ]
    return case("harbor", steps, buses, branches, devices, tou_prices(steps), rho_dg=0.6, s_max=0.25)


def valley():
    steps = 24
    buses = [{"id": 0, "p_load": [0.0] * steps, "q_load": [0.0] * steps}]
    for (_, to, _, _, p_kw, q_kvar) in FEEDER33:
        buses.append({"id": to - 1, "p_load": [r6(p_kw / S_BASE_KVA * f) for f in DAILY_LOAD],
                      "q_load": [r6(q_kvar / S_BASE_KVA * f) for f in DAILY_LOAD]})
    branches = [{"from": a - 1, "to": b - 1, "r": r6(r / Z_BASE), "x": r6(x / Z_BASE)}
                for (a, b, r, x, _, _) in FEEDER33]
    pv_sites = {17: 0.06, 24: 0.05, 32: 0.06, 21: 0.04}
    devices = [{"kind": "pv", "bus": bus, "s_max": s, "p_avail": [r6(0.8 * s * f) for f in SOLAR],
                "curtailable": False} for bus, s in sorted(pv_sites.items())]
    devices += [{"kind": "svc", "bus": 14, "q_max": 0.04}, {"kind": "svc", "bus": 29, "q_max": 0.06}]
    return case("valley", steps, buses, branches, devices, tou_prices(steps), s_max=0.6)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in [("toy", toy()), ("toy_bess", toy_bess()), ("toy_full", toy_full()),
                      ("hamlet6", hamlet()), ("harbor12", harbor()), ("valley33", valley())]:
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
