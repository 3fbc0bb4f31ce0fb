from .aiofsm import StateMachine, Transition, transition
