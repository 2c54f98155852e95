"""Single-bond covalent radii (Angstrom) used for bond perception."""

COVALENT_RADII = {
    "H": 0.37, "D": 0.37, "HE": 0.32,
    "LI": 1.34, "BE": 0.90, "B": 0.82, "C": 0.77, "N": 0.75, "O": 0.73,
    "F": 0.71, "NE": 0.69,
    "NA": 1.54, "MG": 1.30, "AL": 1.18, "SI": 1.11, "P": 1.06, "S": 1.02,
    "CL": 0.99, "AR": 0.97,
    "K": 1.96, "CA": 1.74, "SC": 1.44, "TI": 1.36, "V": 1.25, "CR": 1.27,
    "MN": 1.39, "FE": 1.25, "CO": 1.26, "NI": 1.21, "CU": 1.38, "ZN": 1.31,
    "GA": 1.26, "GE": 1.22, "AS": 1.19, "SE": 1.16, "BR": 1.14, "KR": 1.10,
    "RB": 2.11, "SR": 1.92, "Y": 1.62, "ZR": 1.48, "MO": 1.45, "RU": 1.26,
    "RH": 1.35, "PD": 1.31, "AG": 1.53, "CD": 1.48, "IN": 1.44, "SN": 1.41,
    "SB": 1.38, "TE": 1.35, "I": 1.33, "XE": 1.30,
    "CS": 2.25, "BA": 1.98, "LA": 1.69, "GD": 1.61, "YB": 1.70, "W": 1.46,
    "RE": 1.59, "OS": 1.28, "IR": 1.37, "PT": 1.28, "AU": 1.44, "HG": 1.49,
    "TL": 1.48, "PB": 1.47, "BI": 1.46, "U": 1.70,
}

BOND_TOLERANCE = 0.4

HYDROGENS = frozenset({"H", "D"})


def normalize_element(symbol: str) -> str:
    return symbol.strip().upper()


def is_known(symbol: str) -> bool:
    return normalize_element(symbol) in COVALENT_RADII


def covalent_radius(symbol: str) -> float:
    return COVALENT_RADII[normalize_element(symbol)]
