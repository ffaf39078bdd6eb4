import hypothesis
import numpy as np

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.LOG):
            terminalreporter.write_line(line)
