"""Worked examples used across the test suite (inputs with their realized outputs)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Worked:
    name: str
    input: str
    output: str | None = None  # realized text, labels stripped
    labeled: str | None = None  # model-side output with labels


LENGTH_LEXICON = Worked(
    "length_lexicon",
    "<expression> <mask_0> stood(0) <mask_1> field(1) <mask_2> looking(2) <mask_3> <length=10> </expression>",
    "The player stood in the field looking at the batter",
    "<expression> The_1 player_2 stood(0)_3 in_4 the_5 field(1)_6 looking(2)_7 at_8 the_9 batter_10 </expression>",
)

POSITION_LEXICON = Worked(
    "position_lexicon",
    "Stephen was at a party. <expression> <mask_0> knocked(0) <mask_1> </expression> "
    "He checked it but it was completely broken.",
    "Stephen knocked over a vase while drunk.",
    "<expression> Stephen knocked(0) over a vase while drunk. </expression>",
)

STORY_CONTEXT = (
    "My friends all love to go to the club to dance. They think it's a lot of fun and always invite. "
    "I finally decided to tag along last Saturday."
)
ENDING_0 = "My friends decided to keep inviting me out as I am so much fun."
ENDING_1 = "The next weekend, I was asked to please stay home."
STORY_INFILL = "I danced terribly and broke a friend's toe."

ALTERNATIVE_ENDING = Worked(
    "alternative_ending",
    f"{STORY_CONTEXT} <expression> <options> <choice_0> <mask_0> {ENDING_0} </choice_0> "
    f"<choice_1> <mask_1> {ENDING_1} </choice_1> </options> </expression>",
    f"{STORY_INFILL} {ENDING_1}",
    f"<expression> {STORY_INFILL} {ENDING_1} </expression>",
)

WORKED_ROWS = (LENGTH_LEXICON, POSITION_LEXICON, ALTERNATIVE_ENDING)

# task layouts with placeholder fields
O1, O2, H1, H2 = "$O_1$", "$O_2$", "$H_1$", "$H_2$"
TEMPLATES = {
    "anlg": f"{O1} <expression> <mask_0> </expression> {O2}",
    "anlg_length": f"{O1} <expression> <mask_0> <length=7> </expression> {O2}",
    "anli": f"{O1} <expression> <options> <choice_0> {H1} </choice_0> <choice_1> {H2} </choice_1> </options> </expression> {O2}",
    "commongen": "<expression> <mask_0> c0(0) <mask_1> c1(1) <mask_2> c2(2) <mask_3> </expression>",
    "commongen_length": "<expression> <mask_0> c0(0) <mask_1> c1(1) <mask_2> c2(2) <mask_3> <length=12> </expression>",
    "anlg_lexicon": f"{O1} <expression> <mask_0> w(0) <mask_1> </expression> {O2}",
    "anlg_length_lexicon": f"{O1} <expression> <mask_0> w(0) <mask_1> <length=7> </expression> {O2}",
    "storycloze_infill": "$S_1S_2S_3$ <expression> <mask_0> <options> <choice_0> $E_1$ </choice_0> "
    "<choice_1> $E_2$ </choice_1> </options> </expression>",
    "gigaword_length": "[Text]\n Summarize the aforementioned text in a single phrase.\n "
    "<expression> <mask_0> <length=6> </expression>",
    "mt_terms": "Translate from English to German:\n\n English: [Text] \n German: "
    "<expression> <mask_0> t0(0) <mask_1> t1(1) <mask_2> </expression>",
}

# model outputs for the inputs above, labels stripped
COMMONGEN_LENGTH = Worked(
    "commongen_length",
    "<expression> <mask_0> dance(0) <mask_1> performed(1) <mask_2> stage(2) <mask_3> wearing(3) "
    "<mask_4> costumes(4) <mask_5> <length=11> </expression>",
    "A traditional dance is performed on the stage, wearing colorful costumes",
    "A_1 traditional_2 dance(0)_3 is_4 performed(1)_5 on_6 the_7 stage(2),_8 wearing(3)_9 colorful_10 costumes(4)_11",
)
COMMONGEN_LENGTH_T5 = "A dance is performed on a stage by people wearing costumes"

ANLG_LENGTH_LEXICON = Worked(
    "anlg_length_lexicon",
    "Jim was not confident in his home repair skills. <expression> <mask_0> attended(0) <mask_1> <length=9> "
    "</expression> Jim was so excited to learn a new skill.",
    "Jim attended a home repair workshop to gain confidence.",
    "Jim_1 attended(0)_2 a_3 home_4 repair_5 workshop_6 to_7 gain_8 confidence._9",
)

STORY_PARK = Worked(
    "story_infill",
    "I tried going to the park the other day. The weather seemed nice enough for a walk. "
    "Within minutes of getting there I started sneezing. <expression> <options> <choice_0> <mask_0> "
    "My allergies were too bad and I had to go back home. </choice_0> <choice_1> <mask_1> "
    "It reminded me of how much I loved spring flowers. </choice_1> </options> </expression>",
    "I realized I had forgotten the antihistamines at home. My allergies were too bad and I had to go back home.",
)

GIGAWORD_SOURCE = (
    "japan 's toyota team europe were banned from the world rally championship for one year here on friday "
    "in a crushing ruling by the world council of the international automobile federation."
)
GIGAWORD = Worked(
    "gigaword_length",
    f"{GIGAWORD_SOURCE}\n Summarize the aforementioned text in a single phrase.\n "
    "<expression> <mask_0> <length=6> </expression>",
    "toyota team europe banned by fia",
    "toyota_1 team_2 europe_3 banned_4 by_5 fia_6",
)

WIKTIONARY = Worked(
    "wiktionary",
    "Translate from English to German:\n\n English: Jennifer Aniston need not always be perfect or successful. "
    "\n German: <expression> <mask_0> erfolgreich(0) <mask_1> </expression>",
    "Jennifer Aniston muss nicht immer perfekt oder erfolgreich sein.",
    "Jennifer Aniston muss nicht immer perfekt oder erfolgreich(0) sein.",
)

GENERATED_ROWS = (COMMONGEN_LENGTH, ANLG_LENGTH_LEXICON, STORY_PARK, GIGAWORD, WIKTIONARY)

ALL_INPUTS = [w.input for w in WORKED_ROWS + GENERATED_ROWS] + list(TEMPLATES.values())
