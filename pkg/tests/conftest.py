from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for report in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(report, "user_properties", ()) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
