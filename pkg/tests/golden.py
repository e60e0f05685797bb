"""Hand-built golden corpus: 10 reference organizations, 50 funder strings.

Every truth entry below was derived by walking the rule order by hand:
exact name, alternate name, prefix/suffix (coverage >= 0.5), interior
substring (coverage >= 0.5), acronym; then manual annotations, NER on
medium-frequency strings (100..1000) and the 0.9 Jaccard fallback.
"""

from fundermatch.matcher import ManualAnnotation, MatchType
from fundermatch.reference_index import OrgRecord, build_index, normalize_name


def _org(cid, name, alts=(), acronyms=(), country=None, ror=None, source="funder_id", works=None, grants=None):
    alts = tuple(alts) + tuple(a for a in acronyms if a not in alts)
    return OrgRecord(
        canonical_id=cid,
        source=source,
        display_name=name,
        normalized_name=normalize_name(name),
        ror_id=ror,
        alternate_titles=alts,
        acronyms=tuple(acronyms),
        country_code=country,
        works_count=works,
        grants_count=grants,
    )


ORGS = [
    _org("F1", "National Science Foundation", ["US National Science Foundation"], ["NSF"], "US", "021nxhr62", works=900000),
    _org("F2", "Deutsche Forschungsgemeinschaft", ["German Research Foundation"], ["DFG"], "DE", "018mejw64", works=400000),
    _org("F3", "European Research Council", [], ["ERC"], "BE", "0472cxd90", works=150000),
    _org("F4", "National Institutes of Health", [], ["NIH"], "US", "01cwqze88", works=1200000),
    _org("F5", "Japan Society for the Promotion of Science", [], ["JSPS"], "JP", "00hhkn466", works=500000),
    _org("F6", "Ministry of Health", [], [], "BR", None, works=2000),
    _org("F7", "Ministry of Health", [], [], "GH", None, works=300),
    _org("F8", "Wellcome Trust", ["Wellcome"], [], "GB", "029chgv08", works=120000),
    _org("F9", "National Natural Science Foundation of China", ["Natural Science Foundation of China"], ["NSFC"], "CN",
         "01h0zpd94", works=2500000),
    _org("I10", "Max Planck Society", ["Max-Planck-Gesellschaft"], ["MPG"], "DE", "01hhn8329",
         source="institution_id", works=300000),
]


def golden_index():
    return build_index(ORGS)


N, A, P, S, ACR = (MatchType.NAME_EXACT, MatchType.ALT_NAME_EXACT, MatchType.PREFIX_SUFFIX,
                   MatchType.SUBSTRING, MatchType.ACRONYM)
DOC, MAN, JAC, UN = (MatchType.DOCUMENT_CLUSTERING, MatchType.MANUAL_ANNOTATION,
                     MatchType.JACCARD_FALLBACK, MatchType.UNMATCHED)

# raw string -> (count, match type, candidate ids)
TRUTH = {
    # exact display names
    "National Science Foundation": (5000, N, ("F1",)),
    "Deutsche Forschungsgemeinschaft": (3000, N, ("F2",)),
    "European Research Council": (1500, N, ("F3",)),
    "National Institutes of Health": (8000, N, ("F4",)),
    "Japan Society for the Promotion of Science": (4000, N, ("F5",)),
    "Ministry of Health": (700, N, ("F6", "F7")),
    "Wellcome Trust": (2500, N, ("F8",)),
    "National Natural Science Foundation of China": (9000, N, ("F9",)),
    "Max Planck Society": (600, N, ("I10",)),
    # case/spacing variants cluster with the exact string and inherit its match
    "NATIONAL SCIENCE FOUNDATION": (40, DOC, ("F1",)),
    "deutsche forschungsgemeinschaft": (20, DOC, ("F2",)),
    "Wellcome  Trust": (9, DOC, ("F8",)),
    "MAX PLANCK SOCIETY": (3, DOC, ("I10",)),
    # alternate names, including acronyms stored among them
    "German Research Foundation": (300, A, ("F2",)),
    "US National Science Foundation": (150, A, ("F1",)),
    "Natural Science Foundation of China": (250, A, ("F9",)),
    "Max-Planck-Gesellschaft": (80, A, ("I10",)),
    "NIH": (1200, A, ("F4",)),
    "Wellcome": (60, A, ("F8",)),
    "NSF": (2000, A, ("F1",)),
    "nsf": (10, DOC, ("F1",)),
    # prefix / suffix containment, both directions
    "National Science Foundation (NSF)": (900, P, ("F1",)),
    "National Institutes of Health, USA": (500, P, ("F4",)),
    "Wellcome Trust UK": (45, P, ("F8",)),
    "The Wellcome Trust": (30, P, ("F8",)),
    "European Research Council (ERC)": (1100, P, ("F3",)),
    "Japan Society for the Promotion of Science (JSPS)": (2000, P, ("F5",)),
    "Deutsche Forschungsgemeinschaft (DFG)": (1400, P, ("F2",)),
    "National Science": (12, P, ("F1",)),
    "Research Council": (8, P, ("F3",)),
    "Planck Society": (5, P, ("I10",)),
    # interior substring containment
    "The National Institutes of Health Foundation": (70, S, ("F4",)),
    "Funding from Deutsche Forschungsgemeinschaft grant": (35, S, ("F2",)),
    "society for the promotion": (15, S, ("F5",)),
    "Thanks to European Research Council funding": (25, S, ("F3",)),
    # acronyms pulled from parentheses
    "Dt. Forschungsgem. (DFG)": (110, ACR, ("F2",)),
    "J. Soc. Promot. Sci. (JSPS)": (90, ACR, ("F5",)),
    # manual annotation on a four-member cluster
    "JSPS KAKENHI": (5000, DOC, ("F5",)),
    "jsps kakenhi": (300, MAN, ("F5",)),
    "JSPS  KAKENHI": (20, DOC, ("F5",)),
    "Jsps Kakenhi": (4, DOC, ("F5",)),
    # NER rescue of a medium-frequency string
    "Funded by the National Science Foundation under grant 123": (250, N, ("F1",)),
    # Jaccard fallback on typos
    "Natonal Science Foundation": (3, JAC, ("F1",)),
    "Japan Society for the Promotion of Sciense": (2, JAC, ("F5",)),
    # left unmatched
    "Funded by the European Research Council under grant 55": (50, UN, ()),
    "European Research Counsil": (6, UN, ()),
    "Anonymous private donor": (2, UN, ()),
    "University hospital internal funds": (1, UN, ()),
    "Fondation pour la recherche medicale": (40, UN, ()),
    "Grant-in-Aid": (1200, UN, ()),
}

CORPUS = {raw: count for raw, (count, _, _) in TRUTH.items()}

ANNOTATIONS = [
    ManualAnnotation("jsps kakenhi", "F5"),
    ManualAnnotation("Some funder that never occurs", "F1"),
    ManualAnnotation("Grant-in-Aid", "F999"),
]

EXPECTED_ACRONYMS = {
    "National Science Foundation (NSF)": "NSF",
    "Dt. Forschungsgem. (DFG)": "DFG",
    "J. Soc. Promot. Sci. (JSPS)": "JSPS",
    "European Research Council (ERC)": "ERC",
}
