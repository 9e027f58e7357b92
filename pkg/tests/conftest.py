import collections

NAMES = {
    1: "bistability threshold on P1",
    2: "bistable window and branch stability",
    3: "root and eigenvalue hygiene",
    4: "spectra anchor",
    5: "time-domain oracle equivalence",
    6: "mean-field / steady-state consistency",
    7: "bosonization identities",
    8: "regime audit scales",
}

_results = collections.defaultdict(list)


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results[marker].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_results):
        parts = _results[num]
        ok = all(o == "passed" for _, o in parts)
        verdict = "PASS" if ok else "FAIL"
        tr.write_line(f"{verdict} criterion {num}: {NAMES.get(num, '')}")
        if not ok:
            for name, outcome in parts:
                tr.write_line(f"       {name}: {outcome}")
