"""Exception types shared across the package."""


class VcpaError(Exception):
    """Base class for all domain errors."""


class InvalidPractice(VcpaError):
    """(mode, data type) combination that does not exist."""


class OutOfRange(VcpaError):
    """Numeric argument outside its documented domain."""


class TooFewRows(VcpaError):
    pass


class DegenerateInput(VcpaError):
    """Statistic undefined for this input (e.g. constant vector)."""


class EmptyGroup(VcpaError):
    pass


class TooFewSamples(VcpaError):
    pass


class BothConstant(VcpaError):
    pass


class SchemaMismatch(VcpaError):
    """Input file header does not match the documented schema."""


class EmptyDataset(VcpaError):
    pass


class TooFewResponses(VcpaError):
    pass


class EmptyCluster(VcpaError):
    pass


class DuplicateSeed(VcpaError):
    pass


class BothEmpty(VcpaError):
    pass


class UnknownApp(VcpaError):
    pass


class UnknownPractice(VcpaError):
    pass


class UnknownProfile(VcpaError):
    pass


class UnknownSession(VcpaError):
    pass


class NoProfileSelected(VcpaError):
    pass


class NoPendingNotice(VcpaError):
    pass


class NotDownloaded(VcpaError):
    pass


class TooFewSessions(VcpaError):
    pass


class ReplayMismatch(VcpaError):
    """Recorded notice events contradict recomputed engine decisions."""


class IoFailure(VcpaError):
    pass


class ManifestMismatch(VcpaError):
    """Artifact on disk does not match the hash recorded in the manifest."""
