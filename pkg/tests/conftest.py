def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title, seconds, note = results[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} ({seconds:.1f}s)"
        terminalreporter.write_line(line + (f"  {note}" if note else ""))
