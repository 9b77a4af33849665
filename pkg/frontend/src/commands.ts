/** The natural-language command bar.
 *
 * One text field, two verbs: edit the chart, or ask for a new widget.
 * The bar locks while a command is in flight; synthesis can take a
 * couple of model round trips.
 */

export interface CommandHandlers {
  onChartCommand(command: string): Promise<void>;
  onWidgetCommand(command: string): Promise<void>;
}

export function renderCommandBar(host: HTMLElement, handlers: CommandHandlers): void {
  host.textContent = "";

  const form = document.createElement("form");
  form.className = "command-bar";

  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "describe a chart edit or a widget...";
  input.className = "command-input";

  const editButton = document.createElement("button");
  editButton.type = "submit";
  editButton.textContent = "Edit chart";

  const widgetButton = document.createElement("button");
  widgetButton.type = "button";
  widgetButton.textContent = "New widget";

  const status = document.createElement("span");
  status.className = "command-status";

  form.append(input, editButton, widgetButton, status);
  host.appendChild(form);

  const run = async (handler: (command: string) => Promise<void>) => {
    const command = input.value.trim();
    if (!command) return;
    input.disabled = editButton.disabled = widgetButton.disabled = true;
    status.textContent = "working...";
    status.classList.remove("command-error");
    try {
      await handler(command);
      input.value = "";
      status.textContent = "";
    } catch (exc) {
      status.textContent = exc instanceof Error ? exc.message : String(exc);
      status.classList.add("command-error");
    } finally {
      input.disabled = editButton.disabled = widgetButton.disabled = false;
    }
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void run(handlers.onChartCommand);
  });
  widgetButton.addEventListener("click", () => {
    void run(handlers.onWidgetCommand);
  });
}
