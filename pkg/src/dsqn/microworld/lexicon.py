"""Closed lexicons for the two game genres.

The cooking lexicon is the complete set of surface tokens any cooking game
can emit; the agent vocabulary is built from it. Treasure-hunt games reuse
the shared structural words but draw every entity, room and flavor word
from a disjoint pool, so at evaluation time those tokens map to UNK.
"""

from __future__ import annotations

COOKING_INGREDIENTS = (
    "apple", "bacon", "banana", "bean", "beef", "bread", "carrot", "cheese",
    "chicken", "corn", "cucumber", "egg", "fish", "garlic", "lettuce",
    "mushroom", "onion", "pasta", "pepper", "potato", "pumpkin", "rice",
    "sausage", "tomato",
)

COOKING_TOOLS = ("knife", "stove", "oven")
COOKING_CONTAINER = "fridge"

COOKING_ROOMS = ("kitchen", "pantry", "garden", "cellar", "corridor", "backyard")

ROOM_ADJECTIVES = ("tidy", "messy", "bright", "gloomy", "warm", "chilly", "quiet", "cluttered")

DIRECTIONS = ("north", "south", "east", "west")

PREPARATIONS = ("chop", "fry", "roast")
PREP_STATE = {"chop": "chopped", "fry": "fried", "roast": "roasted"}

# every structural word any cooking template can emit
_STRUCTURAL = (
    "go", "take", "drop", "open", "eat", "look", "examine", "inventory",
    "prepare", "meal", "with", "you", "cannot", "that", "way", "the", "a",
    "an", "and", "is", "are", "in", "on", "here", "there", "this", "it",
    "now", "carry", "carrying", "nothing", "contains", "empty", "closed",
    "your", "goal", "make", "recipe", "needs", "raw", "chopped", "fried",
    "roasted", "ruined", "damaged", "win", "lose", "out", "of", "time",
    "already", "have", "not", "ready", "missing", "something", "see", "can",
    "doors", "lead", "to", "lying", "around", "find", "yourself", "pick",
    "up", "grab", "pack", "put", "down", "set", "swing", "nothing-",
    "hungry", "done", "wall", "full", "looks", "tasty", "plain", "ordinary",
    "useful", "still", "but", "gone", ":", ",", ".",
)


def cooking_lexicon() -> tuple[str, ...]:
    words = set(COOKING_INGREDIENTS)
    words.update(COOKING_TOOLS)
    words.add(COOKING_CONTAINER)
    words.update(COOKING_ROOMS)
    words.update(ROOM_ADJECTIVES)
    words.update(DIRECTIONS)
    words.update(PREPARATIONS)
    words.update(PREP_STATE.values())
    words.update(w for w in _STRUCTURAL if w != "nothing-")
    return tuple(sorted(words))


TREASURE_TARGETS = ("chocolate", "toffee", "fudge", "nougat", "marzipan", "licorice")
TREASURE_KEYS = ("passkey", "latchkey")
TREASURE_LOCKED = ("gate", "portal", "hatch")
TREASURE_CONTAINERS = ("chest", "crate", "coffer")
TREASURE_DISTRACTORS = (
    "amulet", "idol", "medallion", "lantern", "crystal", "relic", "scroll",
    "orb", "statue", "chalice", "crown", "banner", "goblet", "totem",
)
TREASURE_ROOMS = ("vault", "crypt", "attic", "dungeon", "shrine", "grotto")
TREASURE_ADJECTIVES = ("golden", "rusty", "ancient", "gleaming", "carved", "ebony")
TREASURE_VERBS = ("unlock", "locked", "unlocked")


def treasure_entity_lexicon() -> tuple[str, ...]:
    """Every treasure-specific word: entities, rooms, flavor, verbs."""
    words = set(TREASURE_TARGETS)
    words.update(TREASURE_KEYS)
    words.update(TREASURE_LOCKED)
    words.update(TREASURE_CONTAINERS)
    words.update(TREASURE_DISTRACTORS)
    words.update(TREASURE_ROOMS)
    words.update(TREASURE_ADJECTIVES)
    words.update(TREASURE_VERBS)
    return tuple(sorted(words))
