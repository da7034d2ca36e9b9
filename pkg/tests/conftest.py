import pytest


@pytest.fixture
def report_line(request):
    """Write a line straight to the terminal, bypassing output capture, so
    per-criterion pass/fail lines stay visible in the normal test log."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _write(text):
        if reporter is not None:
            reporter.ensure_newline()
            reporter.write_line(text)
        else:
            print(text)

    return _write
