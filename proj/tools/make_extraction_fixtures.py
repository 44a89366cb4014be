#!/usr/bin/env python3
"""Regenerates data/fixtures/extraction: dictionaries, summary-section texts and truth.

Truth is written from the generator's own record of which (role, institution)
rows it rendered, never from running an extractor.
"""

import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures" / "extraction"

# id -> (root, display name, surface variants)
INSTITUTIONS = {
    "Wachovia": ("Wachovia", "Wachovia Corporation",
                 ["Wachovia Bank, National Association", "Wachovia Bank", "WACHOVIA BANK, N.A.",
                  "Wachovia Mortgage Corporation", "Wachovia  Bank"]),
    "National City": ("National City", "National City Corporation",
                      ["National City", "National City Mortgage Co.", "National City Bank"]),
    "HSBC": ("HSBC", "HSBC Holdings", ["HSBC Bank USA, National Association", "HSBC Bank USA", "HSBC Finance Corporation"]),
    "U.S. Bank": ("U.S. Bank", "U.S. Bancorp", ["U.S. Bank National Association", "U.S. Bank, N.A."]),
    "Wells Fargo": ("Wells Fargo", "Wells Fargo & Company", ["Wells Fargo Bank, N.A.", "Wells Fargo Bank, National Association", "Wells Fargo Bank"]),
    "Countrywide": ("Countrywide", "Countrywide Financial", ["Countrywide Home Loans, Inc.", "Countrywide Home Loans Servicing LP", "Countrywide"]),
    "IndyMac": ("IndyMac", "IndyMac Bancorp", ["IndyMac Bank, F.S.B.", "IndyMac Bank", "IndyMac ABS, Inc."]),
    "Ameriquest": ("Ameriquest", "Ameriquest Mortgage", ["Ameriquest Mortgage Company", "Ameriquest Mortgage Securities Inc."]),
    "Deutsche Bank": ("Deutsche Bank", "Deutsche Bank AG", ["Deutsche Bank National Trust Company", "Deutsche Bank Securities Inc."]),
    "Bank of America": ("Bank of America", "Bank of America Corporation", ["Bank of America, National Association", "Bank of America, N.A."]),
    "Banc of America": ("Banc of America", "Banc of America Securities", ["Banc of America Securities LLC", "Banc of America Mortgage Securities, Inc."]),
    "LaSalle": ("LaSalle", "LaSalle Bank", ["LaSalle Bank National Association", "LaSalle Bank, N.A."]),
    "Option One": ("Option One", "Option One Mortgage", ["Option One Mortgage Corporation"]),
    "New Century": ("New Century", "New Century Financial", ["New Century Mortgage Corporation", "New Century Mortgage Securities LLC"]),
    "Fremont": ("Fremont", "Fremont General", ["Fremont Investment & Loan"]),
    "Washington Mutual": ("Washington Mutual", "Washington Mutual", ["Washington Mutual Bank", "Washington Mutual Mortgage Securities Corp."]),
    "Lehman Brothers": ("Lehman Brothers", "Lehman Brothers Holdings", ["Lehman Brothers Holdings Inc.", "Lehman Brothers Inc."]),
    "Aurora": ("Aurora Loan Services", "Aurora Loan Services", ["Aurora Loan Services LLC"]),
    "Citibank": ("Citibank", "Citigroup", ["Citibank, N.A.", "Citibank"]),
    "JPMorgan Chase": ("JPMorgan Chase", "JPMorgan Chase & Co.", ["JPMorgan Chase Bank, National Association", "JPMorgan Chase Bank, N.A."]),
    "Merrill Lynch": ("Merrill Lynch", "Merrill Lynch & Co.", ["Merrill Lynch Mortgage Investors, Inc.", "Merrill Lynch Mortgage Lending, Inc."]),
    "EMC": ("EMC", "EMC Mortgage", ["EMC Mortgage Corporation"]),
    "Equity One": ("Equity One", "Equity One", ["Equity One, Inc."]),
    "Ambac": ("Ambac", "Ambac Financial", ["Ambac Assurance Corporation"]),
    "MBIA": ("MBIA", "MBIA Inc.", ["MBIA Insurance Corporation"]),
}

SUFFIXES = [
    "Bank", "Bank, National Association", "Bank, N.A.", "Bank National Association", "National Association",
    "N.A.", "Bank USA", "Bank USA, National Association", "Inc.", "Corporation", "Corp.", "Co.", "LLC", "LP",
    "Company", "Mortgage Corporation", "Mortgage Co.", "Mortgage Company", "Home Loans, Inc.",
    "Home Loans Servicing LP", "Bank, F.S.B.", "ABS, Inc.", "Mortgage Securities Inc.", "Mortgage Securities, Inc.",
    "Mortgage Securities LLC", "Mortgage Securities Corp.", "National Trust Company", "Securities Inc.",
    "Securities LLC", "Finance Corporation", "Investment & Loan", "Holdings Inc.", "Mortgage Investors, Inc.",
    "Mortgage Lending, Inc.", "Assurance Corporation", "Insurance Corporation", "F.S.B.",
]

ROLE_LABELS = {
    "issuer": ["Issuing Entity", "Issuer"],
    "depositor": ["Depositor"],
    "sponsor": ["Sponsor"],
    "seller": ["Seller", "Sellers"],
    "originator": ["Originator", "Originators"],
    "servicer": ["Servicer", "Master Servicer", "Servicers"],
    "trustee": ["Trustee", "Indenture Trustee"],
    "securities administrator": ["Securities Administrator"],
    "custodian": ["Custodian"],
    "swap counterparty": ["Swap Counterparty"],
    "cap counterparty": ["Cap Counterparty"],
    "insurer": ["Certificate Insurer", "Insurer"],
    "underwriter": ["Underwriter", "Underwriters"],
}

PROSE = {
    "issuer": "The issuing entity will be a trust formed by",
    "depositor": "The depositor is",
    "sponsor": "The sponsor is",
    "seller": "The seller is",
    "originator": "The mortgage loans were originated by the originators,",
    "servicer": "The master servicer will be",
    "trustee": "The trustee is",
    "securities administrator": "The securities administrator will be",
    "custodian": "The custodian is",
    "swap counterparty": "The swap counterparty is",
    "cap counterparty": "The cap counterparty is",
    "insurer": "The certificate insurer is",
    "underwriter": "The underwriters are",
}

ORPHAN_LINES = [
    "{name} has prepared the following summary.",
    "Copies of the agreements are available from {name} upon request.",
    "{name} makes no representation as to the accuracy of this summary.",
]


def join_names(names):
    if len(names) == 1:
        return names[0]
    if len(names) == 2:
        return f"{names[0]} and {names[1]}"
    return ", ".join(names[:-1]) + " and " + names[-1]


def pick_roles(rng):
    core = ["issuer", "depositor", "sponsor", "originator", "servicer", "trustee"]
    extra = rng.sample([r for r in ROLE_LABELS if r not in core], rng.randint(1, 3))
    return core + extra


def pick_names(rng, role):
    ids = list(INSTITUTIONS)
    n = 1
    if role in ("originator", "servicer", "underwriter", "seller"):
        n = rng.choice([1, 1, 2, 2, 3])
    chosen = rng.sample(ids, n)
    return [(fi, rng.choice(INSTITUTIONS[fi][2])) for fi in chosen]


def table_doc(rng, title):
    lines, truth = [title, "Summary of Terms", ""], []
    width = 28
    for role in pick_roles(rng):
        names = pick_names(rng, role)
        label = rng.choice(ROLE_LABELS[role]) + ":"
        lines.append(label.ljust(width) + ", ".join(n for _, n in names))
        truth += [(role, fi) for fi, _ in names]
    return "\n".join(lines) + "\n", truth


def multirow_table_doc(rng, title):
    # Names continue on indented lines below the role label.
    blocks, truth = [title + "\nTransaction Parties"], []
    for role in pick_roles(rng):
        names = pick_names(rng, role)
        label = rng.choice(ROLE_LABELS[role])
        rows = [label.ljust(28) + names[0][1]] + [" " * 28 + n for _, n in names[1:]]
        blocks.append("\n".join(rows))
        truth += [(role, fi) for fi, _ in names]
    return "\n\n".join(blocks) + "\n", truth


def prose_doc(rng, title):
    paras, truth = [title], []
    for role in pick_roles(rng):
        names = pick_names(rng, role)
        sentence = f"{PROSE[role]} {join_names([n for _, n in names])}"
        paras.append(sentence if sentence.endswith(".") else sentence + ".")
        truth += [(role, fi) for fi, _ in names]
    return "\n\n".join(paras) + "\n", truth


def with_orphan(rng, build, title):
    body, truth = build(rng, title)
    fi = rng.choice(list(INSTITUTIONS))
    orphan = rng.choice(ORPHAN_LINES).format(name=rng.choice(INSTITUTIONS[fi][2]))
    return orphan + "\n\n" + body, truth, 1


def main():
    rng = random.Random(20160901)
    (OUT / "docs").mkdir(parents=True, exist_ok=True)

    with open(OUT / "roots.csv", "w") as f:
        f.write("root,standardized_id,display_name\n")
        for fi, (root, display, _) in INSTITUTIONS.items():
            f.write(f"\"{root}\",\"{fi}\",\"{display}\"\n")
    with open(OUT / "suffixes.txt", "w") as f:
        f.write("\n".join(SUFFIXES) + "\n")

    builders = [table_doc, multirow_table_doc, prose_doc]
    truth_rows = []
    for i in range(36):
        doc_id = f"fx{i:03d}"
        year = 2002 + i % 6
        title = f"Mortgage Pass-Through Certificates, Series {year}-{i + 1}"
        build = builders[i % 3]
        if i % 4 == 3:
            text, pairs, orphans = with_orphan(rng, build, title)
        else:
            (text, pairs), orphans = build(rng, title), 0
        (OUT / "docs" / f"{doc_id}.txt").write_text(text)
        uniq = sorted(set(pairs))
        truth_rows.append({"id": doc_id, "year": year, "orphans": orphans,
                           "pairs": [{"role": r, "fi": fi} for r, fi in uniq]})

    # The summary-section example: one institution in several roles, variant names.
    fig = (
        "Wachovia Mortgage Loan Trust, Series 2006-ALT1\n\n"
        "Issuing Entity:          Wachovia Mortgage Loan Trust, Series 2006-ALT1\n"
        "Depositor:               Wachovia Mortgage Loan Trust, LLC\n"
        "Sponsor:                 Wachovia Bank, National Association\n"
        "Seller:                  Wachovia Bank\n"
        "Originators:             Wachovia Mortgage Corporation, National City Mortgage Co.\n"
        "Servicers:               National City\n"
        "Trustee:                 HSBC Bank USA, National Association\n"
    )
    (OUT / "docs" / "summary_wachovia.txt").write_text(fig)
    truth_rows.append({"id": "summary_wachovia", "year": 2006, "orphans": 1, "pairs": [
        {"role": r, "fi": fi} for r, fi in sorted({
            ("issuer", "Wachovia"), ("depositor", "Wachovia"), ("sponsor", "Wachovia"), ("seller", "Wachovia"),
            ("originator", "Wachovia"), ("originator", "National City"), ("servicer", "National City"),
            ("trustee", "HSBC")})]})

    with open(OUT / "truth.jsonl", "w") as f:
        for row in truth_rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
