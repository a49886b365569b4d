import type { TextPatch } from "./api.js";

/**
 * One undoable studio action. Steps are reversed through the service's
 * undo/redo endpoints; text patches are reversed by patching the previous
 * attributes back, so either direction is a plain API round trip.
 */
export type Action =
    | { kind: "step" }
    | { kind: "patch"; step: number; element: number; before: TextPatch; after: TextPatch };

export class ActionHistory {
    private done: Action[] = [];
    private undone: Action[] = [];

    push(action: Action): void {
        this.done.push(action);
        this.undone = [];
    }

    get canUndo(): boolean {
        return this.done.length > 0;
    }

    get canRedo(): boolean {
        return this.undone.length > 0;
    }

    /** Pop the latest action for reversal; null when empty. */
    undo(): Action | null {
        const action = this.done.pop();
        if (action === undefined) {
            return null;
        }
        this.undone.push(action);
        return action;
    }

    /** Pop the latest reversed action for re-application; null when empty. */
    redo(): Action | null {
        const action = this.undone.pop();
        if (action === undefined) {
            return null;
        }
        this.done.push(action);
        return action;
    }

    clear(): void {
        this.done = [];
        this.undone = [];
    }
}
