"""Word pools shared by the vocabulary and corpus builders.

The sentiment corpus is synthetic: templated movie-review sentences built
from these pools. Strong words always appear under their own label, mild
words mostly do (they also appear as the concessive clause in mixed
sentences of the opposite label), so a trained bag-of-components model
ends up with |strong| > |mild| > neutral embedding magnitudes.

Some pairs are deliberately one QWERTY slip apart with opposite polarity
(good/goof, cool/fool) so character-level noise can land on a trained
word of the other class instead of on untrained fragments.
"""

STRONG_POS = [
    "wonderful", "brilliant", "superb", "excellent", "marvelous",
    "terrific", "magnificent", "stunning", "delightful", "flawless",
    "gripping", "riveting", "masterful", "dazzling", "sublime",
]

MILD_POS = [
    "good", "cool", "nice", "charming", "pleasant",
    "solid", "engaging", "warm", "fun", "smart",
    "crisp", "lively", "sweet", "tidy", "deft",
]

STRONG_NEG = [
    "terrible", "awful", "horrible", "dreadful", "atrocious",
    "abysmal", "dismal", "wretched", "appalling", "disastrous",
    "unbearable", "lifeless", "insufferable", "laughable", "botched",
]

MILD_NEG = [
    "weak", "dull", "bland", "slow", "flat",
    "tired", "messy", "thin", "stale", "clumsy",
    "shaky", "limp", "drab", "hollow", "murky",
]

POS_NOUN = ["gem", "treat", "delight", "triumph", "winner", "charmer"]

NEG_NOUN = ["goof", "fool", "mess", "bore", "dud", "flop"]

NEUTRAL_NOUN = [
    "movie", "film", "story", "plot", "cast", "script",
    "scene", "acting", "ending", "dialogue", "pacing", "soundtrack",
    "director", "camera", "humor", "drama", "sequel", "premise",
    "finale", "montage",
]

FILLER = [
    "the", "a", "an", "is", "was", "and", "with", "but",
    "of", "this", "that", "it", "its", "in", "very",
    "really", "quite", "truly", "rather", "somewhat",
]

ALL_WORDS = sorted(
    set(
        STRONG_POS + MILD_POS + STRONG_NEG + MILD_NEG
        + POS_NOUN + NEG_NOUN + NEUTRAL_NOUN + FILLER
    )
)
