"""Question and answer templates for the five spatio-temporal task kinds.

Every answer is a pure function of (task, template_id, payload): rendering
the same payload twice must produce byte-identical text, which is what
dataset validation re-checks. Templates are keyed by task value strings so
this module stays free of generator imports.
"""
from __future__ import annotations

LOCATION_PHRASE = {
    "front": "in front of the person",
    "back": "behind the person",
    "left": "to the left of the person",
    "right": "to the right of the person",
}

MOVEMENT_PHRASE = {
    "front": "walking straight ahead",
    "back": "turning around and walking forward",
    "left": "turning to their left and walking towards it",
    "right": "turning to their right and walking towards it",
}

MOVEMENT_INSTRUCTION = {
    "front": "move forward",
    "back": "move backward",
    "left": "move left",
    "right": "move right",
}

STAY_INSTRUCTION = "stay where you are"

# payload kind required by each (task, template_id)
TEMPLATE_KINDS = {
    "relative_direction": ["hand_proximity", "direction_change", "direction_change", "same_side"],
    "relative_distance": ["distance_trend", "distance_trend", "distance_trend", "closer_than"],
    "find_my_item": ["find_my_item", "find_my_item", "find_my_item"],
    "furniture_affordance": ["furniture_affordance", "furniture_affordance", "furniture_affordance"],
    "action_planning": ["action_planning", "action_planning", "action_planning"],
}


def template_count(task: str) -> int:
    if task not in TEMPLATE_KINDS:
        raise ValueError(f"unknown task: {task!r}")
    return len(TEMPLATE_KINDS[task])


def payload_kind(task: str, template_id: int) -> str:
    kinds = TEMPLATE_KINDS.get(task)
    if kinds is None or not 0 <= template_id < len(kinds):
        raise ValueError(f"unknown template: {task!r}[{template_id}]")
    return kinds[template_id]


def quoted_join(labels) -> str:
    return ", ".join(f"'{v}'" for v in labels)


def natural_join(labels) -> str:
    labels = [f"'{v}'" for v in labels]
    if len(labels) == 1:
        return labels[0]
    return ", ".join(labels[:-1]) + " and " + labels[-1]


def lettered_options(names) -> str:
    return ", ".join(f"{chr(ord('A') + i)}. {name}" for i, name in enumerate(names))


def _loc(direction: str) -> str:
    return LOCATION_PHRASE[direction]


def render_question(task: str, template_id: int, p: dict) -> str:
    kind = payload_kind(task, template_id)
    try:
        if task == "relative_direction":
            if kind == "hand_proximity":
                return (f"Does the hand closer to the {p['object_1']} differ when performing "
                        f"'{p['a1']}' and '{p['ak']}'?")
            if kind == "same_side":
                return (f"Are the {p['object_1']} and the {p['object_2']} on the same side "
                        f"of the person during '{p['a1']}'?")
            if template_id == 1:
                return (f"Is the {p['object_1']} {_loc(p['dir_a1'])} while the person performs "
                        f"'{p['a1']}', and {_loc(p['dir_ak'])} during '{p['ak']}'?")
            return (f"Relative to the person, does the {p['object_1']} stay "
                    f"{_loc(p['dir_a1'])} from '{p['a1']}' through '{p['ak']}'?")
        if task == "relative_distance":
            if kind == "closer_than":
                return (f"During '{p['a1']}', is the person closer to the {p['object_1']} "
                        f"than to the {p['object_2']}?")
            if template_id == 0:
                return (f"Does the person move closer to the {p['object_1']} between "
                        f"'{p['a1']}' and '{p['ak']}'?")
            if template_id == 1:
                return (f"Does the person move away from the {p['object_1']} between "
                        f"'{p['a1']}' and '{p['ak']}'?")
            return (f"After '{p['a1']}', does the person end up closer to the {p['object_1']} "
                    f"once '{p['ak']}' is done?")
        if task == "find_my_item":
            if template_id == 0:
                return f"Where is the {p['object_1']}, and how can the person get to it?"
            if template_id == 1:
                return (f"After '{p['action']}', where did the person leave the "
                        f"{p['object_1']}, and how can it be reached?")
            return (f"Where did the person last put the {p['object_1']}, and what is the "
                    f"way to reach it?")
        if task == "furniture_affordance":
            opts = lettered_options(p["options"])
            if template_id == 0:
                return ("Which of the following objects does the person interact with next, "
                        f"given their previous actions and current motion? Options: {opts}.")
            if template_id == 1:
                return ("Considering what the person has done and where they are heading, "
                        f"which object will they most likely use next? Options: {opts}.")
            return ("Based on the person's previous actions and current movement, which "
                    f"nearby object are they preparing to interact with? Options: {opts}.")
        if task == "action_planning":
            seq = quoted_join([*p["completed"], p["next_action"]])
            if template_id == 0:
                return ("We are performing a task with the following sequence of actions: "
                        f"{seq}. Based on the video, what should I do next, and how can I "
                        "get to the place where the next step happens?")
            if template_id == 1:
                return (f"The task consists of these steps: {seq}. What is the next step, "
                        "and how do I reach the place where it happens?")
            return (f"Given the planned actions {seq}, what comes next after what the person "
                    "has already done, and how should they move to get there?")
    except KeyError as exc:
        raise ValueError(f"payload missing field {exc} for {task}[{template_id}]") from exc
    raise ValueError(f"unknown task: {task!r}")


def render_answer(task: str, template_id: int, p: dict) -> str:
    kind = payload_kind(task, template_id)
    try:
        if kind == "hand_proximity":
            if p["changed"]:
                return (f"Yes, the hand closer to the {p['object_1']} changes from the "
                        f"{p['hand_a1']} hand during '{p['a1']}' to the {p['hand_ak']} hand "
                        f"during '{p['ak']}'.")
            return (f"No, the same hand remains closer to the {p['object_1']} during both "
                    f"'{p['a1']}' and '{p['ak']}'.")
        if kind == "direction_change":
            if not p["changed"]:
                if template_id == 2:
                    return (f"Yes, the {p['object_1']} remains {_loc(p['dir_a1'])} during "
                            f"both '{p['a1']}' and '{p['ak']}'.")
                return (f"The {p['object_1']} remains {_loc(p['dir_a1'])} during both "
                        f"'{p['a1']}' and '{p['ak']}'.")
            if template_id == 2:
                return (f"No, the {p['object_1']} shifts from {_loc(p['dir_a1'])} to "
                        f"{_loc(p['dir_ak'])} between '{p['a1']}' and '{p['ak']}'.")
            return (f"Initially the {p['object_1']} is {_loc(p['dir_a1'])}, but after the "
                    f"person's movement it is {_loc(p['dir_ak'])} during '{p['ak']}'.")
        if kind == "same_side":
            if p["same"]:
                return (f"Yes, both the {p['object_1']} and the {p['object_2']} are "
                        f"{_loc(p['dir_1'])} during '{p['a1']}'.")
            return (f"No, the {p['object_1']} is {_loc(p['dir_1'])} while the "
                    f"{p['object_2']} is {_loc(p['dir_2'])} during '{p['a1']}'.")
        if kind == "distance_trend":
            if p["trend"] == "stationary":
                return (f"The person remains at about the same distance from the "
                        f"{p['object_1']} during both '{p['a1']}' and '{p['ak']}'.")
            if template_id == 0:
                if p["trend"] == "approaching":
                    return f"The person moves closer to the {p['object_1']} from '{p['a1']}' to '{p['ak']}'."
                return (f"The person moves further away from the {p['object_1']} from "
                        f"'{p['a1']}' to '{p['ak']}'.")
            if template_id == 1:
                if p["trend"] == "approaching":
                    return (f"No, the person approaches the {p['object_1']} while going "
                            f"from '{p['a1']}' to '{p['ak']}'.")
                return (f"Yes, the person moves away from the {p['object_1']} while going "
                        f"from '{p['a1']}' to '{p['ak']}'.")
            if p["trend"] == "approaching":
                return (f"Yes, the person starts '{p['a1']}' farther from the {p['object_1']} "
                        f"and ends '{p['ak']}' closer to it.")
            return (f"No, the person starts '{p['a1']}' closer to the {p['object_1']} and "
                    f"ends '{p['ak']}' farther from it.")
        if kind == "closer_than":
            if p["verdict"] == "a":
                return (f"Yes, the person is closer to the {p['object_1']} than to the "
                        f"{p['object_2']} during '{p['a1']}'.")
            if p["verdict"] == "b":
                return (f"No, the person is closer to the {p['object_2']} than to the "
                        f"{p['object_1']} during '{p['a1']}'.")
            return (f"The person is at a similar distance from the {p['object_1']} and the "
                    f"{p['object_2']} during '{p['a1']}'.")
        if kind == "find_my_item":
            loc, move = _loc(p["direction"]), MOVEMENT_PHRASE[p["direction"]]
            if template_id == 0:
                return f"The {p['object_1']} is {loc}. The person can reach it by {move}."
            if template_id == 1:
                return (f"After '{p['action']}', the {p['object_1']} was left {loc}. "
                        f"It can be reached by {move}.")
            return (f"The person last put the {p['object_1']} {loc}. The way to reach it "
                    f"is {move}.")
        if kind == "furniture_affordance":
            return (f"The person is most likely to interact with the {p['answer']} next, "
                    f"since after '{p['last_action']}' they are moving towards the "
                    f"{p['answer']}.")
        if kind == "action_planning":
            done = natural_join(p["completed"])
            if p["moved"]:
                return (f"You have already completed {done}. Next, {p['next_action']}. "
                        f"To get there, {p['instruction']}.")
            return (f"You have already completed {done}. Next, {p['next_action']}. "
                    f"You are already at the right spot, so {p['instruction']}.")
    except KeyError as exc:
        raise ValueError(f"payload missing field {exc} for {task}[{template_id}]") from exc
    raise ValueError(f"unknown template: {task!r}[{template_id}]")
