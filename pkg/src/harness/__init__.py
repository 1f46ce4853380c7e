from .client import HarnessClient
from .compare import CompareMixin
from .generate import GenerateMixin
from .run import RunMixin
from .verify import VerifyMixin


class ExperimentHarness(
    GenerateMixin,
    RunMixin,
    VerifyMixin,
    CompareMixin,
    HarnessClient,
):
    pass
