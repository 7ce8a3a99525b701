#!/usr/bin/env python3
"""Generate the gate fixture corpus: 200 privacy policies and 200 other pages.

Usage: gen_gate_corpus.py OUT_DIR [--seed N]

Documents are assembled from sentence pools with a fixed seed so the corpus
is reproducible byte for byte.
"""
import argparse
import os
import random

COMPANIES = [
    "Acme", "Northwind", "Bluefin", "Cobalt Labs", "Brightpath", "Granite Bank", "Lumen Media", "Pinecone",
    "Orbit Travel", "Harbor Health", "Quill", "Redwood Games", "Sparrow Mail", "Tandem Fitness", "Umbra Cloud",
    "Vantage News", "Willow Books", "Zephyr Energy", "Maple Market", "Kestrel Apps", "Juniper Insurance",
    "Ironclad Security", "Helix Genomics", "Foxglove Fashion", "Everlight Music", "Delta Freight",
]
SERVICES = ["website", "mobile app", "online store", "platform", "service", "newsletter", "app and website"]
DATA = [
    "name", "email address", "postal address", "phone number", "date of birth", "payment card details",
    "IP address", "device identifiers", "location data", "browsing history", "purchase history",
    "account password", "profile photo", "contacts", "health information", "usage statistics",
]
PARTNERS = [
    "advertising networks", "analytics providers", "payment processors", "delivery companies",
    "cloud hosting providers", "affiliated companies", "marketing partners", "law enforcement agencies",
]
PURPOSES = [
    "provide and improve our services", "process your orders", "personalise content", "show you relevant ads",
    "prevent fraud", "comply with legal obligations", "respond to your requests", "send you marketing messages",
    "measure how our site is used", "keep your account secure",
]

POLICY_HEADINGS = [
    "Privacy Policy", "Privacy Notice", "Privacy Statement", "Our Privacy Policy", "Data Protection Notice",
    "How We Use Your Information", "Your Privacy",
]
POLICY_SECTIONS = {
    "intro": [
        "This privacy policy explains how {c} collects, uses and shares the personal information of the people who use the {s}.",
        "{c} respects the privacy of its customers. This notice describes the personal data that we process and the rights that you have under the law.",
        "We at {c} are committed to protecting the information that you share with us when you use the {s}.",
        "This statement applies to all of the information collected by {c} through the {s} and any of the related services that link to it.",
        "Please read this notice carefully so that you understand how {c} treats your personal data and what the choices are that you can make.",
    ],
    "collect": [
        "We collect your {d1} and your {d2} when you register for an account on the {s}.",
        "When you use the {s} we automatically collect your {d1}, your {d2} and information about the device that you are using.",
        "You may give us your {d1} when you contact the customer support team by email or through the chat window.",
        "We may receive your {d1} from {p1} who help us to operate the {s} and to keep it running smoothly.",
        "The information that we collect includes your {d1}, your {d2}, and technical details such as the {d3} of the device.",
        "We record the time and the date of each visit so that we can keep the account secure and detect any unusual activity.",
    ],
    "use": [
        "We use this information to {u1} and to {u2}, and for the other purposes that are described in this policy.",
        "Your personal data is processed in order to {u1}, and only for as long as that is needed.",
        "We rely on your consent or on the legitimate interests of the business to {u1}.",
        "The data that we collect may be combined with other records to {u1} and to {u2}.",
        "We process your {d1} only to {u1}, unless you have agreed that we may use it for something else.",
    ],
    "share": [
        "We share your {d1} with {p1} and with {p2} when this is necessary to provide the service.",
        "We do not sell your personal information, but we do disclose it to {p1} when that is necessary.",
        "Your data may be transferred to {p1} in another country, and in that case we put in place the safeguards that the law requires.",
        "We may disclose the information to {p1} if we are required to do so by law or in order to protect the rights of the company.",
        "Data that has been combined so that it no longer identifies you may be shared with {p1} for research.",
    ],
    "choice": [
        "You can opt out of the marketing emails at any time by clicking the link at the bottom of the message.",
        "You may withdraw your consent at any time through the settings page of your account.",
        "Most browsers allow you to refuse cookies, but if you do so some of the features of the {s} may not work as they should.",
        "You can ask us not to use your {d1} for advertising by writing to the address at the end of this notice.",
        "If you no longer want to receive notifications, you can turn them off in the settings of the device.",
    ],
    "rights": [
        "You have the right to access, to correct and to delete the personal data that we hold about you.",
        "Under the data protection law of your country you may ask for a copy of the information that we keep.",
        "You may object to the processing of your data or ask us to restrict the way in which it is used.",
        "You also have the right to make a complaint to the supervisory authority in the country where you live.",
        "To exercise any of these rights, please send an email to the data protection officer of the company.",
    ],
    "retention": [
        "We keep your {d1} for as long as the account is active and for a short time after it is closed.",
        "Personal data is kept for no longer than is necessary to {u1}.",
        "We delete inactive accounts and all of the data associated with them after {n} months.",
        "The records of each transaction are stored for {n} years in order to meet the tax rules that apply to us.",
    ],
    "security": [
        "We use encryption and strict access controls to protect the information that you give us.",
        "All of the staff are trained in data protection and are bound by a duty of confidentiality.",
        "No method of sending data over the internet is completely secure, but we take the measures that are reasonable to protect it.",
        "The data is stored on secure servers that are operated for us by {p1}.",
    ],
    "children": [
        "The {s} is not directed to children under the age of {k}, and we do not knowingly collect their data.",
        "If you believe that a child under the age of {k} has given us personal information, please contact us and we will delete it.",
    ],
    "changes": [
        "We may update this policy from time to time, and we will tell you about any of the changes that are important.",
        "The date at the top of this notice shows when it was last changed.",
        "If we make a significant change to the policy, we will send you an email or show a notice on the {s}.",
    ],
    "contact": [
        "If you have any questions about this policy, you can contact {c} at privacy@{dom}.",
        "You can reach the privacy team by writing to the address that is listed on the contact page.",
        "Questions about the use of your personal data can be sent to {c}, for the attention of the data protection officer.",
    ],
}

OTHER_KINDS = {
    "news": {
        "headings": ["Local council approves new budget", "Storm causes flooding in coastal towns",
                     "Team wins championship after dramatic final", "Markets fall as inflation rises",
                     "New bridge opens after three years of work", "Elections set for next spring"],
        "sentences": [
            "The council voted {n} to {k} in favour of the proposal on Tuesday evening.",
            "Residents said the decision would affect schools, roads and public transport.",
            "Heavy rain fell throughout the night, and several roads were closed by the police.",
            "Emergency services rescued {n} people from flooded homes near the harbour.",
            "The striker scored twice in the second half to secure the title.",
            "Fans gathered in the city square to celebrate until the early hours.",
            "Shares in banks and energy companies dropped sharply in early trading.",
            "Analysts expect interest rates to rise again before the end of the year.",
            "The mayor thanked the engineers and workers who completed the project.",
            "Opposition leaders criticised the timing of the announcement.",
            "A spokesperson declined to comment on the ongoing investigation.",
            "The minister is expected to visit the region later this week.",
            "Traffic on the main road is likely to remain heavy until the weekend.",
            "Officials estimate the repairs will cost around {n} million.",
        ],
    },
    "recipe": {
        "headings": ["Easy tomato soup", "Lemon drizzle cake", "Weeknight vegetable curry", "Classic pancakes",
                     "Roast chicken with herbs", "Spiced lentil stew"],
        "sentences": [
            "Preheat the oven to {n} degrees and grease a large baking tin.",
            "Chop the onions and garlic finely and fry them gently in olive oil.",
            "Add the tomatoes, stock and a pinch of salt, then simmer for {k} minutes.",
            "Whisk the eggs and sugar together until pale and fluffy.",
            "Fold in the flour carefully so the batter stays light.",
            "Season with pepper, fresh herbs and a squeeze of lemon juice.",
            "Serve hot with crusty bread or steamed rice.",
            "Leftovers keep in the fridge for up to three days.",
            "Stir in the spices and cook for another minute until fragrant.",
            "Bake until golden and a skewer inserted in the centre comes out clean.",
            "Let the dough rest for {k} minutes before rolling it out.",
            "Sprinkle with toasted seeds just before serving.",
        ],
    },
    "product": {
        "headings": ["Trail running shoe", "Wireless headphones", "Stainless steel kettle", "Ergonomic office chair",
                     "Waterproof hiking jacket", "Smart desk lamp"],
        "sentences": [
            "This is one of the lightest models in the range, and it is made to last for years of everyday use.",
            "The battery lasts for up to {n} hours on a single charge, which is enough for a whole week at the office.",
            "It is available in black, grey and navy, and in all of the sizes from small to extra large.",
            "Delivery is free on all orders over {n}, and you can return the item within {k} days if you are not happy with it.",
            "The fabric lets the air through and keeps you dry on the long walks in the hills.",
            "You can adjust the height and the tilt so that it stays comfortable through the whole of the working day.",
            "Many of our customers have written to say how quiet it is and how much they like the design.",
            "It comes with a two year warranty and a case that you can carry it in when you travel.",
            "Simply plug it in, pair it with the phone and start listening to the music that you love.",
            "It is made from recycled materials and is packed in a box that contains no plastic at all.",
            "If you add it to the basket today, it should arrive at your door by the end of the week.",
            "You can compare it with the other items in the outdoor range on the next page.",
        ],
    },
    "travel": {
        "headings": ["Three days in Lisbon", "Walking the coastal path", "A weekend in the mountains",
                     "Island hopping on a budget", "Exploring the old town", "Train journey across the plains"],
        "sentences": [
            "We arrived late in the evening and walked straight to the harbour for dinner.",
            "The narrow streets of the old town are full of small cafes and bookshops.",
            "On the second day we hired bikes and followed the river to the lighthouse.",
            "The view from the top of the hill was worth every step of the climb.",
            "Buses run every {k} minutes from the station to the beach.",
            "Our guesthouse served fresh bread and local honey each morning.",
            "Bring sturdy shoes, a rain jacket and plenty of water.",
            "The museum is free on the first Sunday of every month.",
            "We took the ferry across the bay and watched the sunset from the deck.",
            "Tickets cost about {n} each and can be bought on board.",
            "In the evening the square fills with musicians and street vendors.",
            "Next time we plan to stay longer and explore the northern villages.",
        ],
    },
    "tech": {
        "headings": ["Getting started with the command line", "How to back up your laptop",
                     "Five tips for faster spreadsheets", "Setting up a home network", "Release notes version {n}",
                     "Understanding unit tests"],
        "sentences": [
            "Open a terminal and type the command shown below to list the files in a folder.",
            "Connect an external drive and choose it as the backup destination.",
            "Use keyboard shortcuts to move between cells without reaching for the mouse.",
            "Place the router in a central spot away from thick walls.",
            "This release fixes {k} bugs and improves startup time.",
            "A unit test checks one small piece of code in isolation.",
            "Restart the application after installing the update.",
            "If the build fails, read the first error message carefully.",
            "Scripts can automate repetitive tasks and save hours each week.",
            "The new version adds a dark theme and better search.",
            "Remember to label your cables before moving the equipment.",
            "Run the tests again after every change to catch mistakes early.",
        ],
    },
    "terms": {
        "headings": ["Terms of Service", "Terms and Conditions", "Conditions of Sale", "Acceptable Use Rules"],
        "sentences": [
            "By using the {s} you agree to be bound by these terms.",
            "You must be at least {k} years old to open an account.",
            "All prices include taxes unless stated otherwise.",
            "We may suspend accounts that break these rules.",
            "Orders are confirmed only when payment has been received.",
            "You may cancel a subscription at any time before the next billing date.",
            "These terms are governed by the laws of the country where {c} is registered.",
            "Content you upload remains yours, but you grant us a licence to display it.",
            "We are not liable for losses caused by events beyond our reasonable control.",
            "Disputes will first be handled through our complaints procedure.",
            "Do not attempt to interfere with the operation of the {s}.",
            "Refunds are issued to the original payment method within {k} days.",
        ],
    },
}


def fill(rng, template, company):
    d = rng.sample(DATA, 3)
    p = rng.sample(PARTNERS, 2)
    u = rng.sample(PURPOSES, 2)
    dom = company.lower().replace(" ", "") + ".com"
    return template.format(
        c=company, s=rng.choice(SERVICES), d1=d[0], d2=d[1], d3=d[2], p1=p[0], p2=p[1], u1=u[0], u2=u[1],
        n=rng.randint(2, 90), k=rng.randint(3, 30), dom=dom,
    )


def policy_doc(rng):
    company = rng.choice(COMPANIES)
    parts = [rng.choice(POLICY_HEADINGS)]
    sections = list(POLICY_SECTIONS)
    keep = ["intro"] + rng.sample(sections[1:], rng.randint(5, len(sections) - 1))
    for name in sections:
        if name not in keep:
            continue
        pool = POLICY_SECTIONS[name]
        count = rng.randint(1, min(3, len(pool)))
        parts.append(" ".join(fill(rng, t, company) for t in rng.sample(pool, count)))
    return "\n\n".join(parts) + "\n"


def other_doc(rng, kind):
    company = rng.choice(COMPANIES)
    spec = OTHER_KINDS[kind]
    parts = [fill(rng, rng.choice(spec["headings"]), company)]
    sentences = rng.sample(spec["sentences"], rng.randint(9, len(spec["sentences"])))
    while sentences:
        take = rng.randint(2, 4)
        parts.append(" ".join(fill(rng, t, company) for t in sentences[:take]))
        sentences = sentences[take:]
    return "\n\n".join(parts) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=20180525)
    ap.add_argument("--per-class", type=int, default=200)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    for label in ("policy", "other"):
        os.makedirs(os.path.join(args.out_dir, label), exist_ok=True)
    kinds = sorted(OTHER_KINDS)
    for i in range(args.per_class):
        with open(os.path.join(args.out_dir, "policy", f"{i:03}.txt"), "w") as f:
            f.write(policy_doc(rng))
        with open(os.path.join(args.out_dir, "other", f"{i:03}.txt"), "w") as f:
            f.write(other_doc(rng, kinds[i % len(kinds)]))


if __name__ == "__main__":
    main()
