import os

import hypothesis
import numpy as np
import pytest

from strata.models.system import LayerAllocation, StragglerModel, SystemShape
from strata.services.presets import FIG3_KS

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("standard", deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "standard"))


@pytest.fixture
def fig3_shape() -> SystemShape:
    return SystemShape(n=20, k=100, r=10)


@pytest.fixture
def fig3_alloc() -> LayerAllocation:
    return LayerAllocation(ks=FIG3_KS)


@pytest.fixture
def fig3_model() -> StragglerModel:
    return StragglerModel(per_task_rate=10.0, per_task_shift=0.01)


@pytest.fixture
def fig4_model() -> StragglerModel:
    return StragglerModel(per_task_rate=1.0, per_task_shift=0.01)
