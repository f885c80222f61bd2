import pytest

from attrshare import RunConfig, ScenarioConfig


def standard_scenario(**overrides) -> ScenarioConfig:
    """The fixed-seed two-phase scenario most behavioral tests run on."""
    settings = dict(
        dim=32,
        partitions=(8, 4),
        h=5,
        attribute_overlap=0.5,
        samples_per_class_train=200,
        samples_per_class_eval=100,
        noise_sigma=0.05,
        n_distractor_attributes=32,
        n_background_samples=0,
        seed=1,
    )
    settings.update(overrides)
    return ScenarioConfig(**settings)


@pytest.fixture(scope="session")
def standard_config() -> RunConfig:
    return RunConfig(scenario=standard_scenario())
