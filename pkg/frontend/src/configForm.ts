import type { ParameterDef, PropertyDefinition, RunConfigurationBody, Subject } from "./types";
import { validateUdc } from "./udc";

// The form is generated from the property catalog: one checkbox per property
// of the subject's modality, parameter inputs appear when their property is
// selected, defaults prefilled from the ParameterDef payloads.

function parameterInput(propertyId: string, def: ParameterDef): HTMLElement {
  const wrapper = document.createElement("label");
  wrapper.className = "param";
  wrapper.dataset.property = propertyId;
  const caption = document.createElement("span");
  caption.textContent = `${def.name}`;
  if (def.help) caption.title = def.help;
  const input = document.createElement("input");
  input.name = `${propertyId}.${def.name}`;
  input.dataset.valueType = def.value_type;
  if (def.value_type === "int" || def.value_type === "float") {
    input.type = "number";
    if (def.value_type === "float") input.step = "any";
    if (def.minimum !== null) input.min = String(def.minimum);
    if (def.maximum !== null) input.max = String(def.maximum);
  } else {
    input.type = "text";
  }
  if (def.default !== null && def.default !== undefined) {
    input.value = String(def.default);
  }
  if (def.mandatory && def.default === null) input.required = true;
  wrapper.append(caption, input);
  return wrapper;
}

function parseParameter(raw: string, valueType: string): unknown {
  if (raw === "") return undefined;
  if (valueType === "int") return parseInt(raw, 10);
  if (valueType === "float") return parseFloat(raw);
  if (valueType === "json") return JSON.parse(raw);
  return raw;
}

export interface ConfigFormHandles {
  form: HTMLFormElement;
  submitButton: HTMLButtonElement;
  udcError: HTMLElement;
  selectedProperties(): string[];
  payload(): RunConfigurationBody;
}

export function renderRunConfigurationForm(
  container: HTMLElement,
  subject: Subject,
  definitions: PropertyDefinition[],
  onSubmit: (body: RunConfigurationBody) => void,
): ConfigFormHandles {
  const modality = subject.data_properties.modality ?? "tabular";
  const relevant = definitions.filter((d) => d.modality === modality);

  const form = document.createElement("form");
  form.className = "run-config";

  const propertyList = document.createElement("fieldset");
  propertyList.className = "properties";
  for (const definition of relevant) {
    const row = document.createElement("label");
    row.className = "property-row";
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.name = "property";
    checkbox.value = definition.id;
    const caption = document.createElement("span");
    caption.textContent = definition.display_name || definition.id;
    if (definition.description) caption.title = definition.description;
    row.append(checkbox, caption);
    propertyList.append(row);

    const params = document.createElement("div");
    params.className = "property-params";
    params.dataset.for = definition.id;
    params.hidden = true;
    for (const parameterDef of definition.parameter_defs) {
      params.append(parameterInput(definition.id, parameterDef));
    }
    propertyList.append(params);
    checkbox.addEventListener("change", () => {
      params.hidden = !checkbox.checked;
      refresh();
    });
  }
  form.append(propertyList);

  // shared inputs used by fairness-related properties and the generator
  const shared = document.createElement("fieldset");
  shared.className = "data-specific";
  shared.innerHTML = `
    <label>protected attributes (comma separated)
      <input name="protected_attributes" type="text" placeholder="marital,gender"></label>
    <label>favorable label <input name="favorable_label" type="text"></label>
    <label>minority group expression
      <input name="minority_group" type="text" placeholder="marital == 'single'"></label>
    <label>generation limit <input name="generation_limit" type="number" value="100" min="1"></label>
    <label>seed <input name="seed" type="number" value="0"></label>
    <label>user-defined constraints (JSON, optional)
      <textarea name="udc" rows="4" placeholder='{"age": {"range": [60, 80]}}'></textarea></label>
    <p class="udc-error" role="alert" hidden></p>
  `;
  form.append(shared);

  const submitButton = document.createElement("button");
  submitButton.type = "submit";
  submitButton.textContent = "save and run";
  form.append(submitButton);

  const udcField = form.querySelector<HTMLTextAreaElement>("textarea[name=udc]")!;
  const udcError = form.querySelector<HTMLElement>(".udc-error")!;

  const selectedProperties = (): string[] =>
    Array.from(form.querySelectorAll<HTMLInputElement>("input[name=property]:checked")).map(
      (c) => c.value,
    );

  function refresh(): void {
    const udc = validateUdc(udcField.value);
    udcError.hidden = udc.ok;
    udcError.textContent = udc.ok ? "" : udc.errors.join("; ");
    submitButton.disabled = selectedProperties().length === 0 || !udc.ok;
  }

  udcField.addEventListener("input", refresh);

  function payload(): RunConfigurationBody {
    const parameterValues: Record<string, Record<string, unknown>> = {};
    for (const propertyId of selectedProperties()) {
      const inputs = form.querySelectorAll<HTMLInputElement>(
        `.property-params[data-for="${propertyId}"] input`,
      );
      const values: Record<string, unknown> = {};
      for (const input of inputs) {
        const parsed = parseParameter(input.value, input.dataset.valueType ?? "string");
        if (parsed !== undefined) values[input.name.split(".", 2)[1]] = parsed;
      }
      if (Object.keys(values).length > 0) parameterValues[propertyId] = values;
    }
    const field = (name: string) =>
      form.querySelector<HTMLInputElement>(`[name="${name}"]`)!.value.trim();
    const dataSpecific: Record<string, unknown> = {};
    const attrs = field("protected_attributes");
    if (attrs) dataSpecific.protected_attributes = attrs.split(",").map((a) => a.trim());
    if (field("favorable_label")) dataSpecific.favorable_label = field("favorable_label");
    if (field("minority_group")) dataSpecific.minority_group = field("minority_group");
    const udc = validateUdc(udcField.value);
    if (udc.value !== null) dataSpecific.udc = udc.value;
    return {
      selected_properties: selectedProperties(),
      parameter_values: parameterValues,
      data_specific: dataSpecific,
      generation_limit: parseInt(field("generation_limit"), 10),
      seed: parseInt(field("seed"), 10),
    };
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    refresh();
    if (!submitButton.disabled) onSubmit(payload());
  });

  refresh();
  container.append(form);
  return { form, submitButton, udcError, selectedProperties, payload };
}
