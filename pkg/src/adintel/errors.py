"""Domain exceptions shared across the pipeline.

Convention: anything that aborts an operation raises; anything recoverable
per-item (a bad input line, a failed extraction) is collected into report
structures instead.
"""

from __future__ import annotations


class AdIntelError(Exception):
    """Base class for all domain errors."""


# -- store --------------------------------------------------------------

class IngestIoError(AdIntelError):
    """Source file unreadable; ingestion aborts."""


class NotFound(AdIntelError):
    """Unknown id."""


# -- gateway ------------------------------------------------------------

class UnknownTemplate(AdIntelError):
    def __init__(self, template_id: str):
        super().__init__(f"unknown template: {template_id}")
        self.template_id = template_id


class MissingBinding(AdIntelError):
    def __init__(self, name: str):
        super().__init__(f"missing binding: {name}")
        self.name = name


class ProviderUnavailable(AdIntelError):
    """Provider not configured or unreachable."""


class ProviderTimeout(AdIntelError):
    """Provider did not answer within timeout_s."""


# -- extraction / synthesis ----------------------------------------------

class ExtractionFailed(AdIntelError):
    def __init__(self, ref: str, reason: str):
        super().__init__(f"extraction failed for {ref}: {reason}")
        self.ref = ref
        self.reason = reason


# -- embeddings / clustering ---------------------------------------------

class EmptyText(AdIntelError):
    def __init__(self, ad_id: str):
        super().__init__(f"nothing to embed for ad {ad_id}")
        self.ad_id = ad_id


class TooFewPoints(AdIntelError):
    """Fewer vectors than requested clusters."""


class DisjointUniverses(AdIntelError):
    """Two clusterings share no ad ids."""


# -- narrative ------------------------------------------------------------

class NoOfferings(AdIntelError):
    """Brief proposal requires at least one offering."""


# -- creative optimizer ----------------------------------------------------

class HeatmapError(AdIntelError):
    pass


class ShapeMismatch(HeatmapError):
    pass


class AllZero(HeatmapError):
    pass


class ZeroImpressions(AdIntelError):
    pass


class ZeroDenominator(AdIntelError):
    def __init__(self, metric: str, variant: str):
        super().__init__(f"zero denominator for {metric} on {variant}")
        self.metric = metric
        self.variant = variant


# -- telemetry --------------------------------------------------------------

class EmptyInput(AdIntelError):
    pass


class AllUndefined(AdIntelError):
    def __init__(self, metric: str):
        super().__init__(f"no defined values for metric {metric}")
        self.metric = metric


class UndecodableImage(AdIntelError):
    pass


class NoActionsFound(AdIntelError):
    pass
