#!/usr/bin/env python3
"""Generate annotated policy fixtures in the annotation file format.

Usage: gen_annotation_fixtures.py TAXONOMY OUT_DIR ALT_DIR [--policies N] [--seed N]

OUT_DIR receives `{policy}.pre.json` and `{policy}.post.json` for each
policy. ALT_DIR receives the same segments labeled by a second, noisier
annotator, so two annotation sources can be compared.
"""
import argparse
import json
import os
import random

import toml

# Attributes a segment of each category may carry.
CATEGORY_ATTRS = {
    "first-party-collection-use": ["action-first-party", "info-type", "purpose", "choice-type", "choice-scope"],
    "third-party-sharing-collection": ["action-third-party", "third-party-entity", "info-type", "purpose"],
    "user-choice-control": ["choice-type", "choice-scope", "purpose"],
    "international-specific-audiences": ["audience-type"],
    "data-security": ["security-measure"],
    "user-access-edit-deletion": ["access-type"],
    "data-retention": ["retention-period", "info-type", "purpose"],
    "policy-change": ["type-of-policy-change", "how-notified"],
    "privacy-contact-information": [],
}

# Raw spellings an external labeler might emit for canonical names.
CATEGORY_SPELLINGS = {
    "first-party-collection-use": ["First Party Collection/Use", "first-party"],
    "third-party-sharing-collection": ["Third Party Sharing/Collection", "third-party"],
}
VALUE_SPELLINGS = {
    "opt-out-link": ["op-out-link", "Opt-Out Link"],
    "opt-out-via-contacting-company": ["op-out-via-contacting-company"],
    "unspecified": ["Unspecified"],
}

PHRASES = {
    "first-party-collection-use": "We collect {v} about you",
    "third-party-sharing-collection": "We share {v} with partners",
    "user-choice-control": "You can control {v}",
    "international-specific-audiences": "Special terms apply to {v}",
    "data-security": "We protect your data using {v}",
    "user-access-edit-deletion": "You may {v} your account data",
    "data-retention": "We keep {v} records",
    "policy-change": "We may change this policy and tell you by {v}",
    "privacy-contact-information": "Contact our privacy team with questions",
}


def spell(rng, table, name):
    options = table.get(name)
    if options and rng.random() < 0.3:
        return rng.choice(options)
    return name


class Generator:
    def __init__(self, taxonomy, rng):
        self.rng = rng
        self.categories = taxonomy["categories"]
        self.values = {}
        for name, attr in taxonomy["attributes"].items():
            vals = list(attr["values"])
            if attr["has_unspecified"]:
                vals.append("unspecified")
            self.values[name] = vals

    def attr_values(self, attr):
        rng = self.rng
        vals = self.values[attr]
        if "unspecified" in vals and rng.random() < 0.3:
            picked = {"unspecified"}
            if rng.random() < 0.3:
                picked.add(rng.choice(vals))
            return picked
        return set(rng.sample(vals, rng.choice([1, 1, 2, 3])))

    def segment(self):
        rng = self.rng
        cats = [rng.choice(self.categories)]
        if rng.random() < 0.2:
            cats.append(rng.choice(self.categories))
        attrs = {}
        for cat in cats:
            for attr in CATEGORY_ATTRS[cat]:
                if rng.random() < 0.7:
                    attrs.setdefault(attr, set()).update(self.attr_values(attr))
        seg = {"categories": sorted(set(cats)), "attributes": {a: sorted(v) for a, v in sorted(attrs.items())}}
        seg["text"] = text_for(seg)
        return seg

    def mutate(self, seg):
        """A revised segment: labels gained, lost or made specific."""
        rng = self.rng
        seg = json.loads(json.dumps(seg))
        attrs = seg["attributes"]
        roll = rng.random()
        if roll < 0.4 and attrs:
            attr = rng.choice(sorted(attrs))
            concrete = [v for v in self.values[attr] if v != "unspecified"]
            attrs[attr] = sorted((set(attrs[attr]) - {"unspecified"}) | {rng.choice(concrete)})
        elif roll < 0.6 and attrs:
            del attrs[rng.choice(sorted(attrs))]
        elif roll < 0.8:
            cat = seg["categories"][0]
            for attr in CATEGORY_ATTRS[cat]:
                if attr not in attrs:
                    attrs[attr] = sorted(self.attr_values(attr))
                    break
        else:
            extra = rng.choice(self.categories)
            seg["categories"] = sorted(set(seg["categories"]) | {extra})
        seg["text"] = text_for(seg)
        return seg

    def noisy(self, seg):
        """The same segment as a second annotator might label it."""
        rng = self.rng
        seg = json.loads(json.dumps(seg))
        if rng.random() < 0.15 and seg["attributes"]:
            attr = rng.choice(sorted(seg["attributes"]))
            seg["attributes"][attr] = sorted(self.attr_values(attr))
        if rng.random() < 0.05 and len(seg["categories"]) > 1:
            seg["categories"] = seg["categories"][:1]
        return seg


def text_for(seg):
    cat = seg["categories"][0]
    values = [v for vs in seg["attributes"].values() for v in vs]
    shown = ", ".join(v.replace("-", " ") for v in values[:3]) or "this information"
    return PHRASES[cat].format(v=shown) + "."


def to_document(rng, policy_id, version, segments):
    out = []
    for seg in segments:
        categories = {spell(rng, CATEGORY_SPELLINGS, c): round(rng.uniform(0.55, 0.99), 2) for c in seg["categories"]}
        # A label below the threshold, which readers must drop.
        if rng.random() < 0.3:
            categories.setdefault(rng.choice(list(CATEGORY_ATTRS)), rng.choice([0.1, 0.35, 0.5]))
        attributes = {}
        for attr, values in seg["attributes"].items():
            attributes[attr] = {spell(rng, VALUE_SPELLINGS, v): round(rng.uniform(0.55, 0.99), 2) for v in values}
        out.append({"text": seg["text"], "categories": categories, "attributes": attributes})
    return {"policy_id": policy_id, "version": version, "segments": out}


def write(path, doc):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("taxonomy")
    ap.add_argument("out_dir")
    ap.add_argument("alt_dir")
    ap.add_argument("--policies", type=int, default=16)
    ap.add_argument("--seed", type=int, default=115)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    gen = Generator(toml.load(args.taxonomy), rng)
    os.makedirs(args.out_dir, exist_ok=True)
    os.makedirs(args.alt_dir, exist_ok=True)
    for i in range(args.policies):
        policy_id = f"site{i:02d}.example"
        pre = [gen.segment() for _ in range(rng.randint(6, 24))]
        post = [gen.mutate(s) if rng.random() < 0.3 else s for s in pre if rng.random() > 0.1]
        post += [gen.segment() for _ in range(rng.randint(0, 30 - len(post)) // 3)]
        for version, segs in (("pre", pre), ("post", post)):
            name = f"{policy_id}.{version}.json"
            write(os.path.join(args.out_dir, name), to_document(rng, policy_id, version, segs))
            alt = [gen.noisy(s) for s in segs]
            write(os.path.join(args.alt_dir, name), to_document(rng, policy_id, version, alt))


if __name__ == "__main__":
    main()
