class TransitionNotAllowed(Exception):
    pass


class InvalidStartState(TransitionNotAllowed):
    def __init__(self, transition: str, state, allowed):
        self.transition = transition
        self.state = state
        self.allowed = list(allowed)
        super().__init__(f"Current state is {state}. {transition} allows transitions from {self.allowed}.")


class ConditionsNotMet(TransitionNotAllowed):
    def __init__(self, conditions):
        self.conditions = conditions
        names = ", ".join(condition.__name__ for condition in conditions)
        super().__init__(f"Following conditions did not return True: {names}")
