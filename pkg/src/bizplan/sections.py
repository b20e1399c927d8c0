"""The nine canonical business-plan sections and their fixed ordering.

The section set is closed: every plan document carries exactly these nine
sections, always in the order they are declared below.
"""

from __future__ import annotations

import enum


class SectionId(str, enum.Enum):
    EXECUTIVE_SUMMARY = "executive_summary"
    COMPANY_DESCRIPTION = "company_description"
    MARKET_ANALYSIS = "market_analysis"
    ORGANIZATION_MANAGEMENT = "organization_management"
    SERVICE_PRODUCT_LINE = "service_product_line"
    MARKETING_SALES = "marketing_sales"
    FUNDING_REQUEST = "funding_request"
    FINANCIAL_PROJECTIONS = "financial_projections"
    APPENDIX = "appendix"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @property
    def order(self) -> int:
        return _ORDER[self]

    @classmethod
    def parse(cls, value: str) -> "SectionId":
        """Parse a wire identifier, raising ValueError for unknown values."""
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown section id: {value!r}") from None


# Definition order above is the canonical order.
CANONICAL_ORDER: tuple[SectionId, ...] = tuple(SectionId)

_ORDER = {sid: i for i, sid in enumerate(CANONICAL_ORDER)}

_DISPLAY_NAMES = {
    SectionId.EXECUTIVE_SUMMARY: "Executive Summary",
    SectionId.COMPANY_DESCRIPTION: "Company Description",
    SectionId.MARKET_ANALYSIS: "Market Analysis",
    SectionId.ORGANIZATION_MANAGEMENT: "Organization and Management",
    SectionId.SERVICE_PRODUCT_LINE: "Service or Product Line",
    SectionId.MARKETING_SALES: "Marketing and Sales",
    SectionId.FUNDING_REQUEST: "Funding Request",
    SectionId.FINANCIAL_PROJECTIONS: "Financial Projections",
    SectionId.APPENDIX: "Appendix",
}
