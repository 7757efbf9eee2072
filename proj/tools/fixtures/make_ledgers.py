#!/usr/bin/env python3
"""Generates the labeled run ledgers (deterministic).

fixtures/runs/reviewed/ledger.jsonl
    13 script generations holding 50 test cases, reviewed as 30 pass, 4 minor fix,
    12 lack of context (each regenerated once, then passed) and 4 complex error.
    The 12 regenerated cases belong to 4 stories whose scripts were regenerated.
fixtures/runs/feedback/ledger.jsonl
    166 scenario generations; 65 of them received feedback, 62 helpful.
"""
import hashlib
import json
import os
import sys

USAGE = {"input_tokens": 9500, "output_tokens": 750}
COST = 0.1175  # (9500 * 0.01 + 750 * 0.03) / 1000

STORIES = [
    ("SHOP-201", "Product search with filters"),
    ("SHOP-202", "Wish list for logged-in customers"),
    ("SHOP-203", "Dealer selection on the product page"),
    ("SHOP-204", "Size guide for apparel"),
    ("SHOP-205", "Cart quantity update"),
    ("SHOP-206", "Voucher code in the cart"),
    ("SHOP-207", "Delivery address form validation"),
    ("SHOP-208", "Payment method selection"),
    ("SHOP-209", "Order confirmation page"),
    ("SHOP-210", "Order history in the profile"),
    ("SHOP-211", "Newsletter opt-in in the footer"),
    ("SHOP-212", "Product image gallery zoom"),
    ("SHOP-213", "Stock availability badge"),
]
# Stories 0 and 1 have three scenarios, the rest four: 2*3 + 11*4 = 50.
TESTS_PER_STORY = [3, 3] + [4] * 11
REGENERATED_STORIES = [2, 5, 8, 11]  # three lack-of-context cases each
MINOR = {(3, 1), (6, 2), (9, 0), (12, 3)}
COMPLEX = {(4, 3), (7, 1), (10, 2), (12, 0)}


def gen_id(*parts):
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def script(story_title, titles, regenerated=False):
    lines = [f"describe('{story_title}', () => {{", "  beforeEach(() => {", "    cy.setTestCookies();", "  });", ""]
    blocks = []
    for t in titles:
        first = len(lines) + 1
        lines += [f"  it('{t}', () => {{",
                  "    // Open the page under test" + (" with the clarified context" if regenerated else ""),
                  "    cy.visit('/de-DE/shop');",
                  "    // Check the expected outcome",
                  "    cy.get('[data-testid=\"page-root\"]').should('be.visible');",
                  "  });", ""]
        blocks.append({"title": t, "first_line": first, "last_line": len(lines) - 1, "comment_lines": 2})
    lines.append("});")
    return "\n".join(lines) + "\n", blocks


def feature(story_title, titles):
    out = [f"Feature: {story_title}", ""]
    for t in titles:
        out += [f"Scenario: {t}", "Given the customer is on the shop", "When the customer acts",
                "Then the expected outcome is shown", ""]
    return "\n".join(out).rstrip() + "\n"


def script_event(idx, key, title, titles, ts, parent=None, context=None):
    code, blocks = script(title, titles, parent is not None)
    gid = gen_id("script", key, ts, parent or "")
    return gid, {
        "event": "script_generation",
        "generation_id": gid,
        "parent_generation_id": parent,
        "regeneration_depth": 1 if parent else 0,
        "timestamp": ts,
        "issue_key": key,
        "story": {"title": title, "description": f"As a customer, I want {title.lower()}."},
        "feature_text": feature(title, titles),
        "page_urls": [f"https://shop.example.com/de-DE/shop/story/{idx}"],
        "extra_context": context,
        "model_id": "gpt-4-1106-preview",
        "raw_response": "```typescript\n" + code + "```\n",
        "code": code,
        "fence_language_tag": "typescript",
        "fence_count": 1,
        "warnings": [],
        "structure": {"valid": True, "comment_lines": 2 * len(titles),
                      "test_block_titles": titles, "test_blocks": blocks, "findings": []},
        "mapping": {"matched": [{"scenario": t, "test": t} for t in titles], "missing_scenarios": [],
                    "extra_tests": [], "comment_coverage": 1.0},
        "usage": USAGE,
        "cost": COST,
        "currency": "EUR",
    }


def verdict(case, v, detail="", patch=None, after=None):
    rec = {"event": "verdict", "case_id": case, "verdict": v, "detail": detail, "state_after": after}
    if patch:
        rec["patch"] = patch
    return rec


def reviewed_run(path):
    records = []
    roots = []
    for i, ((key, title), n) in enumerate(zip(STORIES, TESTS_PER_STORY)):
        titles = [f"{title}: scenario {k + 1}" for k in range(n)]
        gid, rec = script_event(i, key, title, titles, f"2024-06-{3 + i // 5:02d}T09:{10 + i:02d}:00Z")
        records.append(rec)
        roots.append((gid, key, title, titles))

    for i, (gid, key, title, titles) in enumerate(roots):
        for k, t in enumerate(titles):
            case = f"{gid}#{k}"
            if (i, k) in MINOR:
                before = "    cy.get('[data-testid=\"page-root\"]').should('be.visible');"
                records.append(verdict(case, "minor_error", "fixed a wrong data-testid by hand",
                                       {"before": before, "after": before.replace("page-root", "page-main")},
                                       "minor_fixed"))
            elif (i, k) in COMPLEX:
                records.append(verdict(case, "complex_error", "test logic does not match the scenario", None,
                                       "discarded"))
            elif i in REGENERATED_STORIES and k < 3:
                records.append(verdict(case, "lack_of_context", "element state not derivable from the inputs", None,
                                       "awaiting_regeneration"))
            else:
                records.append(verdict(case, "pass", after="valid_as_generated"))

    for i in REGENERATED_STORIES:
        gid, key, title, titles = roots[i]
        context = "Disabled controls on this page are hidden instead of greyed out."
        new_gid, rec = script_event(i, key, title, titles, f"2024-06-10T14:{i:02d}:00Z", parent=gid, context=context)
        records.append(rec)
        for k in range(3):
            records.append({"event": "regeneration", "case_id": f"{gid}#{k}", "generation_id": new_gid})
            records.append(verdict(f"{gid}#{k}", "pass", after="regenerated_valid"))

    write(path, records)


def feedback(path):
    records = []
    for i in range(166):
        gid = gen_id("scenarios", str(i))
        records.append({
            "event": "scenario_generation", "generation_id": gid,
            "timestamp": f"2024-05-{1 + i // 8:02d}T10:{i % 60:02d}:00Z",
            "story": {"title": f"Usage {i + 1}", "description": "Story submitted through the form.", "key": None},
            "model_id": "gpt-4-1106-preview", "raw_response": "", "feature_text": "", "scenario_count": 0,
            "lint": [], "usage": {"input_tokens": 0, "output_tokens": 0}, "cost": 0.0, "currency": "EUR"})
        # Every 166/65-th usage answered the form; three of the answers were negative.
        if i * 65 // 166 != (i + 1) * 65 // 166:
            n = (i + 1) * 65 // 166
            records.append({"event": "feedback", "generation_id": gid, "helpful": n not in (17, 41, 60),
                            "comment": None, "timestamp": f"2024-05-{1 + i // 8:02d}T11:00:00Z"})
    write(path, records)


def write(path, records):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")
    print(f"{path}: {len(records)} records")


if __name__ == "__main__":
    root = sys.argv[1] if len(sys.argv) > 1 else "fixtures/runs"
    reviewed_run(os.path.join(root, "reviewed", "ledger.jsonl"))
    feedback(os.path.join(root, "feedback", "ledger.jsonl"))
