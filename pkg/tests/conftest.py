"""Shared test configuration."""

from hypothesis import HealthCheck, settings

# Wall-clock per-example deadlines are flaky on loaded machines; the suite
# bounds runtime through example counts instead.
settings.register_profile(
    "ci",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")
